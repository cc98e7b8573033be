"""Concrete schemes, initial data and exact solutions for the benchmark problems.

Scalar problems (D1Q2):

====  ==========  ===========================  =====  ====
test  flux        initial datum                mu     T
====  ==========  ===========================  =====  ====
I     3u/4        exp(-20 x^2)                 inf    0.4
II    3u/4        indicator of |x| <= 1/2      0      0.4
III   u^2/2       (1 + tanh(100 x)) / 2        inf    0.4
IV    u^2/2       indicator of |x| <= 1/2      0      0.7
V     u^2/2       hat max(0, 1 - |x|)          0      1.3
====  ==========  ===========================  =====  ====
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf

from .dyadic_mesh import MeshGeometry
from .lbm_core import SchemeSpec

DEFAULT_GRAVITY = 9.81


# ---------------------------------------------------------------------------
# fluxes and schemes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarFlux:
    kind: str
    c: float = 0.75

    def __post_init__(self):
        if self.kind not in ("advection", "burgers"):
            raise ValueError(f"unknown flux {self.kind!r}")

    def __call__(self, u):
        if self.kind == "advection":
            return self.c * u
        return 0.5 * u * u

    def derivative(self, u):
        if self.kind == "advection":
            return np.full_like(np.asarray(u, dtype=float), self.c)
        return u


def build_d1q2(flux: ScalarFlux, lam: float = 1.0, s: float = 1.0) -> SchemeSpec:
    if not lam > 0:
        raise ValueError(f"lattice velocity must be positive, got {lam}")
    if not 0 < s <= 2:
        raise ValueError(f"relaxation rate must lie in (0, 2], got {s}")

    def equilibrium(m):
        return flux(m[:, :1])

    return SchemeSpec(
        name=f"d1q2-{flux.kind}",
        velocities=(1, -1),
        lam=lam,
        moment_matrix=np.array([[1.0, 1.0], [lam, -lam]]),
        q_cons=1,
        equilibrium=equilibrium,
        relaxation=(s,),
    )


def _check_vacuum(rho: np.ndarray) -> None:
    if np.any(rho <= 0):
        raise FloatingPointError("vacuum state: non-positive density in equilibrium evaluation")


def shallow_water_energy(h, q, g):
    return q * q / h + 0.5 * g * h * h


def build_d1q3_sw(g: float = DEFAULT_GRAVITY, lam: float = 2.0, s2: float = 1.0) -> SchemeSpec:
    def equilibrium(m):
        h, q = m[:, 0], m[:, 1]
        _check_vacuum(h)
        return shallow_water_energy(h, q, g)[:, None]

    M = np.array([[1.0, 1.0, 1.0], [0.0, lam, -lam], [0.0, lam**2, lam**2]])
    return SchemeSpec("d1q3-sw", (0, 1, -1), lam, M, 2, equilibrium, (s2,))


def build_d1q5_sw(g: float = DEFAULT_GRAVITY, lam: float = 2.0, alpha: float = 1.0, beta: float = 1.0,
                  s2: float = 1.0, s3: float = 1.0, s4: float = 1.0) -> SchemeSpec:
    def equilibrium(m):
        h, q = m[:, 0], m[:, 1]
        _check_vacuum(h)
        e2 = shallow_water_energy(h, q, g)
        return np.column_stack([e2, alpha * lam**2 * q, beta * lam**2 * e2])

    v = np.array([0.0, 1.0, -1.0, 2.0, -2.0]) * lam
    M = np.vstack([v**p for p in range(5)])
    return SchemeSpec("d1q5-sw", (0, 1, -1, 2, -2), lam, M, 2, equilibrium, (s2, s3, s4))


def euler_fluxes(rho, mom, energy, gamma_gas):
    """Mass, momentum and energy fluxes of the Euler system."""
    f_rho = mom
    f_mom = (1.5 - 0.5 * gamma_gas) * mom * mom / rho + (gamma_gas - 1.0) * energy
    f_e = gamma_gas * energy * mom / rho + 0.5 * (1.0 - gamma_gas) * mom**3 / rho**2
    return f_rho, f_mom, f_e


def build_euler_vectorial(gamma_gas: float = 1.4, lam: float = 3.0, s: float | Sequence[float] = 1.75) -> SchemeSpec:
    """Three coupled D1Q2 blocks for (rho, rho u, E).

    Populations are ordered ``(rho+, rho-, mom+, mom-, E+, E-)``; moments are
    reordered so that the conserved ``(rho, rho u, E)`` come first, followed
    by their three flux moments.
    """
    if not gamma_gas > 1:
        raise ValueError(f"ratio of specific heats must exceed 1, got {gamma_gas}")
    rates = (float(s),) * 3 if np.isscalar(s) else tuple(s)

    def equilibrium(m):
        rho, mom, energy = m[:, 0], m[:, 1], m[:, 2]
        _check_vacuum(rho)
        return np.column_stack(euler_fluxes(rho, mom, energy, gamma_gas))

    M = np.zeros((6, 6))
    for b in range(3):
        M[b, 2 * b: 2 * b + 2] = 1.0
        M[3 + b, 2 * b: 2 * b + 2] = (lam, -lam)
    return SchemeSpec("d1q2x3-euler", (1, -1, 1, -1, 1, -1), lam, M, 3, equilibrium, rates)


# ---------------------------------------------------------------------------
# exact cell averages of piecewise data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Piece:
    """Polynomial ``sum c_i x**i`` on ``[left, right]`` (zero elsewhere)."""

    left: float
    right: float
    coeffs: tuple[float, ...]


def piecewise_cell_averages(pieces: Sequence[Piece], edges: np.ndarray) -> np.ndarray:
    """Exact averages of a piecewise polynomial over the cells delimited by ``edges``."""
    lo, hi = edges[:-1], edges[1:]
    total = np.zeros(lo.size)
    for p in pieces:
        a = np.clip(lo, p.left, p.right)
        b = np.clip(hi, p.left, p.right)
        prim = np.polynomial.polynomial.Polynomial(p.coeffs).integ()
        total += prim(b) - prim(a)
    return total / (hi - lo)


def _logcosh(y):
    y = np.abs(y)
    return y + np.log1p(np.exp(-2.0 * y)) - math.log(2.0)


# ---------------------------------------------------------------------------
# test problems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InitialDatum:
    """A named initial condition with point and exact cell-average evaluators.

    ``averages(edges)`` returns an array ``(n_cells, q_cons)``.
    """

    name: str
    point: Callable[[np.ndarray], np.ndarray]
    averages: Callable[[np.ndarray], np.ndarray]

    def on_geometry(self, geometry: MeshGeometry) -> np.ndarray:
        edges = geometry.a + geometry.dx * np.arange(geometry.n_finest + 1)
        return np.asarray(self.averages(edges), dtype=float).reshape(geometry.n_finest, -1)


def _gaussian_avg(edges, shift=0.0):
    r = math.sqrt(20.0)
    a, b = edges[:-1] - shift, edges[1:] - shift
    return (math.sqrt(math.pi) / (2 * r)) * (erf(r * b) - erf(r * a)) / (b - a)


def _box_pieces(shift=0.0):
    return [Piece(-0.5 + shift, 0.5 + shift, (1.0,))]


def _hat_pieces():
    return [Piece(-1.0, 0.0, (1.0, 1.0)), Piece(0.0, 1.0, (1.0, -1.0))]


def _tanh_primitive(x):
    return 0.5 * x + _logcosh(100.0 * x) / 200.0


def _tanh_avg(edges):
    return np.diff(_tanh_primitive(edges)) / np.diff(edges)


def _col(f):
    return lambda e: np.asarray(f(e))[:, None]


SCALAR_TESTS = {
    "I": dict(flux="advection", mu_bar=math.inf, T=0.4),
    "II": dict(flux="advection", mu_bar=0.0, T=0.4),
    "III": dict(flux="burgers", mu_bar=math.inf, T=0.4),
    "IV": dict(flux="burgers", mu_bar=0.0, T=0.7),
    "V": dict(flux="burgers", mu_bar=0.0, T=1.3),
}


def scalar_initial_datum(test: str) -> InitialDatum:
    test = test.upper()
    if test == "I":
        return InitialDatum("I", lambda x: np.exp(-20.0 * x**2), _col(_gaussian_avg))
    if test in ("II", "IV"):
        return InitialDatum(test, lambda x: (np.abs(x) <= 0.5).astype(float),
                            _col(lambda e: piecewise_cell_averages(_box_pieces(), e)))
    if test == "III":
        return InitialDatum("III", lambda x: 0.5 * (1.0 + np.tanh(100.0 * x)), _col(_tanh_avg))
    if test == "V":
        return InitialDatum("V", lambda x: np.maximum(0.0, 1.0 - np.abs(x)),
                            _col(lambda e: piecewise_cell_averages(_hat_pieces(), e)))
    raise ValueError(f"unknown scalar test {test!r}")


def riemann_datum(name: str, left: Sequence[float], right: Sequence[float], x0: float = 0.0) -> InitialDatum:
    left, right = np.asarray(left, dtype=float), np.asarray(right, dtype=float)

    def point(x):
        return np.where((np.asarray(x) < x0)[:, None], left, right)

    def averages(edges):
        lo, hi = edges[:-1], edges[1:]
        frac = np.clip((x0 - lo) / (hi - lo), 0.0, 1.0)[:, None]
        return frac * left + (1.0 - frac) * right

    return InitialDatum(name, point, averages)


def shallow_water_riemann() -> InitialDatum:
    """(h, hu) = (2, 0) left of 0 and (1, 0) right of it."""
    return riemann_datum("sw", (2.0, 0.0), (1.0, 0.0))


def sod_datum() -> InitialDatum:
    """(rho, rho u, E) = (1, 0, 2.5) left of 0 and (0.125, 0, 0.25) right of it."""
    return riemann_datum("sod", (1.0, 0.0, 2.5), (0.125, 0.0, 0.25))


# ---------------------------------------------------------------------------
# exact solutions of the scalar tests
# ---------------------------------------------------------------------------


def _bisect(fun, lo, hi, tol=1e-12, maxiter=200):
    """Vectorised bisection for increasing ``fun`` with a root in ``[lo, hi]``."""
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        right = fun(mid) > 0
        hi = np.where(right, mid, hi)
        lo = np.where(right, lo, mid)
        if np.all(hi - lo < tol):
            break
    return 0.5 * (lo + hi)


def _tanh_u0(xi):
    return 0.5 * (1.0 + np.tanh(100.0 * xi))


def _burgers_tanh_foot(x, t):
    """Foot of the characteristic through ``x``: root of ``xi + u0(xi) t = x``."""
    x = np.asarray(x, dtype=float)
    return _bisect(lambda xi: xi + _tanh_u0(xi) * t - x, x - t - 1.0, x + 1.0)


@dataclass(frozen=True)
class ExactSolution:
    point: Callable[[np.ndarray], np.ndarray]
    averages: Callable[[np.ndarray], np.ndarray]

    def on_geometry(self, geometry: MeshGeometry) -> np.ndarray:
        edges = geometry.a + geometry.dx * np.arange(geometry.n_finest + 1)
        return np.asarray(self.averages(edges), dtype=float).reshape(-1, 1)


def _burgers_hat_pieces(t):
    if t < 1.0:
        # left branch u=(1+x)/(1+t) on [-1, t], right branch u=(1-x)/(1-t) on [t, 1]
        return [Piece(-1.0, t, (1.0 / (1.0 + t), 1.0 / (1.0 + t))),
                Piece(t, 1.0, (1.0 / (1.0 - t), -1.0 / (1.0 - t)))]
    shock = math.sqrt(2.0 * (1.0 + t)) - 1.0
    return [Piece(-1.0, shock, (1.0 / (1.0 + t), 1.0 / (1.0 + t)))]


def _burgers_box_pieces(t):
    if t >= 2.0:
        raise ValueError("the box solution is tabulated only before the fan reaches the shock (t < 2)")
    if t == 0.0:
        return _box_pieces()
    head = -0.5 + t
    shock = 0.5 + 0.5 * t
    return [Piece(-0.5, head, (0.5 / t, 1.0 / t)), Piece(head, shock, (1.0,))]


def _pieces_point(pieces, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for p in pieces:
        inside = (x >= p.left) & (x < p.right)
        out[inside] = np.polynomial.polynomial.polyval(x[inside], p.coeffs)
    return out


def exact_scalar_solution(test: str, t: float) -> ExactSolution:
    """Entropy solution of a scalar test at time ``t``."""
    test = test.upper()
    if t < 0:
        raise ValueError("time must be non-negative")
    if test == "I":
        shift = 0.75 * t
        return ExactSolution(lambda x: np.exp(-20.0 * (np.asarray(x) - shift) ** 2),
                             lambda e: _gaussian_avg(e, shift))
    if test == "II":
        pieces = _box_pieces(0.75 * t)
    elif test == "IV":
        pieces = _burgers_box_pieces(t)
    elif test == "V":
        pieces = _hat_pieces() if t == 0 else _burgers_hat_pieces(t)
    elif test == "III":
        def point(x):
            return _tanh_u0(_burgers_tanh_foot(x, t))

        def averages(edges):
            # along characteristics: int u dx = [U0(xi) + t u0(xi)^2 / 2]
            xi = _burgers_tanh_foot(edges, t)
            prim = _tanh_primitive(xi) + 0.5 * t * _tanh_u0(xi) ** 2
            return np.diff(prim) / np.diff(edges)

        return ExactSolution(point, averages)
    else:
        raise ValueError(f"no exact solution for test {test!r}")
    return ExactSolution(lambda x: _pieces_point(pieces, x), lambda e: piecewise_cell_averages(pieces, e))


def scalar_scheme(test: str, lam: float = 1.0, s: float = 1.0, c: float = 0.75) -> SchemeSpec:
    flux = ScalarFlux(SCALAR_TESTS[test.upper()]["flux"], c)
    return build_d1q2(flux, lam, s)
