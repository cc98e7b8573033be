"""Lattice Boltzmann schemes in moment form and the uniform reference scheme."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_field
from .dyadic_mesh import BoundaryMode, MeshGeometry, as_boundary

logger = logging.getLogger(__name__)

Equilibrium = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SchemeSpec:
    """A DdQq scheme: integer velocities, moment basis, equilibria and relaxation rates.

    The first ``q_cons`` moments are conserved.  ``equilibrium`` maps an array
    of conserved moments with shape ``(n, q_cons)`` to the equilibria of the
    remaining moments, shape ``(n, q - q_cons)``.
    """

    name: str
    velocities: tuple[int, ...]
    lam: float
    moment_matrix: np.ndarray = field(repr=False)
    q_cons: int
    equilibrium: Equilibrium = field(repr=False)
    relaxation: tuple[float, ...]
    max_relaxation: float = 2.0
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        M = np.array(self.moment_matrix, dtype=float)
        q = len(self.velocities)
        if M.shape != (q, q):
            raise ValueError(f"moment matrix must be {q}x{q}, got {M.shape}")
        if not 0 < self.q_cons < q:
            raise ValueError("need 0 < q_cons < q")
        if any(int(w) != w for w in self.velocities):
            raise ValueError("velocities must be integer multiples of the lattice velocity")
        if not self.lam > 0:
            raise ValueError(f"lattice velocity must be positive, got {self.lam}")
        if np.linalg.cond(M) > 1e12:
            raise ValueError("moment matrix is singular")
        s = tuple(float(x) for x in self.relaxation)
        if len(s) != q - self.q_cons:
            raise ValueError(f"expected {q - self.q_cons} relaxation rates, got {len(s)}")
        if not all(0 < x <= self.max_relaxation for x in s):
            raise ValueError(f"relaxation rates must lie in (0, {self.max_relaxation}], got {s}")
        M.setflags(write=False)
        inv = np.linalg.inv(M)
        inv.setflags(write=False)
        object.__setattr__(self, "moment_matrix", M)
        object.__setattr__(self, "inverse", inv)
        object.__setattr__(self, "velocities", tuple(int(w) for w in self.velocities))
        object.__setattr__(self, "relaxation", s)

    @property
    def q(self) -> int:
        return len(self.velocities)

    @property
    def sigma(self) -> int:
        return max(abs(w) for w in self.velocities)

    def moments(self, F: np.ndarray) -> np.ndarray:
        return F @ self.moment_matrix.T

    def populations(self, m: np.ndarray) -> np.ndarray:
        return m @ self.inverse.T

    def conserved(self, F: np.ndarray) -> np.ndarray:
        return self.moments(F)[..., : self.q_cons]

    def equilibrium_moments(self, conserved: np.ndarray) -> np.ndarray:
        conserved = np.atleast_2d(conserved)
        return np.asarray(self.equilibrium(conserved), dtype=float).reshape(conserved.shape[0], -1)

    def relax(self, m: np.ndarray, m_eq: np.ndarray) -> np.ndarray:
        """Conserved moments untouched, the others relaxed towards ``m_eq``."""
        s = np.asarray(self.relaxation)
        out = m.copy()
        out[:, self.q_cons:] = (1.0 - s) * m[:, self.q_cons:] + s * m_eq
        return out

    def equilibrium_populations(self, conserved: np.ndarray) -> np.ndarray:
        conserved = np.atleast_2d(np.asarray(conserved, dtype=float))
        m = np.hstack([conserved, self.equilibrium_moments(conserved)])
        return self.populations(m)


def time_step(geometry: MeshGeometry, lam: float) -> float:
    """Acoustic scaling ``dt = dx / lambda`` on the finest lattice."""
    return geometry.dx / lam


def n_steps(T: float, dt: float) -> int:
    N = int(round(T / dt))
    if abs(N * dt - T) > dt / 2 + 1e-12 * dt:
        logger.warning("final time %g is not a multiple of dt=%g; using %d steps", T, dt, N)
    return N


def collide(F: np.ndarray, spec: SchemeSpec) -> np.ndarray:
    """Local relaxation, cell by cell, with equilibria at each cell's own moments."""
    m = spec.moments(F)
    m_eq = spec.equilibrium_moments(m[:, : spec.q_cons])
    return spec.populations(spec.relax(m, m_eq))


def collide_uniform(F: np.ndarray, spec: SchemeSpec) -> np.ndarray:
    return collide(F, spec)


def stream_uniform(F: np.ndarray, spec: SchemeSpec, boundary=BoundaryMode.COPY) -> np.ndarray:
    """``F^h_k <- F^h_{k - w^h}``; ghost cells replicate or wrap."""
    boundary = as_boundary(boundary)
    n = F.shape[0]
    idx = np.arange(n)
    out = np.empty_like(F)
    for h, w in enumerate(spec.velocities):
        out[:, h] = F[boundary.map_index(idx - w, n), h] if w else F[:, h]
    return out


def step_uniform(F: np.ndarray, spec: SchemeSpec, boundary=BoundaryMode.COPY) -> np.ndarray:
    return stream_uniform(collide_uniform(F, spec), spec, boundary)


def continuity_constant_advection(c: float, lam: float, s: float) -> float:
    """Optimal l1 continuity constant of D1Q2 for linear advection at speed ``c``."""
    if not 0 < c <= lam:
        raise ValueError(f"requires 0 < c <= lambda, got c={c}, lambda={lam}")
    ratio = 1.0 + c / lam
    if s <= 2.0 / ratio:
        return 1.0
    return s * ratio - 1.0


@dataclass
class UniformState:
    populations: np.ndarray
    geometry: MeshGeometry

    def __post_init__(self):
        if self.populations.shape[0] != self.geometry.n_finest:
            raise ValueError("populations must cover the finest lattice")


class ReferenceLBM(BaseEstimator):
    """Uniform finest-lattice scheme.

    ``fit(X)`` takes the initial conserved moments on the
    ``root_cells * 2**max_level`` finest cells, initialises populations at equilibrium and advances ``T``.
    ``predict(x)`` samples the final conserved moments at points ``x``.
    """

    def __init__(self, scheme=None, domain=(-3.0, 3.0), max_level=9, T=0.4, boundary="copy", root_cells=1):
        self.scheme = scheme
        self.domain = domain
        self.max_level = max_level
        self.T = T
        self.boundary = boundary
        self.root_cells = root_cells

    def fit(self, X, y=None):
        if not isinstance(self.scheme, SchemeSpec):
            raise ValueError("scheme must be a SchemeSpec")
        a, b = self.domain
        geometry = MeshGeometry(float(a), float(b), 0, int(self.max_level), self.root_cells)
        X = check_field(X, geometry.n_finest, n_features=self.scheme.q_cons)
        dt = time_step(geometry, self.scheme.lam)
        N = n_steps(self.T, dt)
        F = self.scheme.equilibrium_populations(X)
        for _ in range(N):
            F = step_uniform(F, self.scheme, self.boundary)
        self.geometry_ = geometry
        self.n_steps_ = N
        self.populations_ = F
        self.moments_ = self.scheme.conserved(F)
        return self

    def predict(self, x):
        check_is_fitted(self, "moments_")
        g = self.geometry_
        x = np.asarray(x, dtype=float)
        k = np.clip(np.floor((x - g.a) / g.dx).astype(int), 0, g.n_finest - 1)
        return self.moments_[k]


__all__ = [
    "SchemeSpec",
    "UniformState",
    "ReferenceLBM",
    "collide",
    "collide_uniform",
    "stream_uniform",
    "step_uniform",
    "continuity_constant_advection",
    "time_step",
    "n_steps",
]
