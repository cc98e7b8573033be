"""Adaptive lattice Boltzmann stepping on multiresolution trees."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_epsilon, check_field, check_gamma, check_levels, check_mu_bar
from .config import RunConfig
from .dyadic_mesh import BoundaryMode, MeshGeometry, MeshTree, as_boundary
from .lbm_core import SchemeSpec, collide, n_steps, step_uniform, stream_uniform, time_step
from .metrics import ErrorReport, compression_factor, weighted_l1, weighted_l1_columns
from .models import exact_scalar_solution
from .multiresolution import LeafField, ThresholdPolicy, adapt_mesh, reconstruct_finest

logger = logging.getLogger(__name__)


class CollisionMode(str, Enum):
    LEAVES = "leaves"
    RECONSTRUCTED = "reconstructed"


@dataclass(frozen=True)
class AdaptiveState:
    tree: MeshTree
    field: LeafField
    n: int
    policy: ThresholdPolicy
    spec: SchemeSpec
    collision: CollisionMode = CollisionMode.LEAVES
    boundary: BoundaryMode = BoundaryMode.COPY

    def __post_init__(self):
        if self.field.tree != self.tree:
            raise ValueError("field must live on the complete leaves of the state's tree")
        object.__setattr__(self, "collision", CollisionMode(self.collision))
        object.__setattr__(self, "boundary", as_boundary(self.boundary))

    @property
    def gamma(self) -> int:
        return self.policy.gamma

    def reconstruct(self) -> np.ndarray:
        """Populations reconstructed on the finest lattice."""
        return reconstruct_finest(self.field, self.gamma, self.boundary)


def initial_state(geometry: MeshGeometry, spec: SchemeSpec, conserved: np.ndarray, policy: ThresholdPolicy,
                  collision=CollisionMode.LEAVES, boundary=BoundaryMode.COPY) -> AdaptiveState:
    """Equilibrium populations on the full tree."""
    tree = MeshTree.full(geometry)
    F = spec.equilibrium_populations(conserved)
    return AdaptiveState(tree, LeafField(tree, F), 0, policy, spec, collision, boundary)


def leaf_means(tree: MeshTree, finest: np.ndarray) -> np.ndarray:
    """Mean of a finest-level array over the subcells of every complete leaf."""
    js, ks = tree.leaf_arrays
    shift = tree.geometry.max_level - js
    starts = ks << shift
    sums = np.add.reduceat(finest, starts, axis=0)
    return sums / (1 << shift)[:, None]


def collide_leaves(field: LeafField, spec: SchemeSpec) -> LeafField:
    return LeafField(field.tree, collide(field.values, spec))


def collide_reconstructed(field: LeafField, spec: SchemeSpec, gamma: int = 1,
                          boundary=BoundaryMode.COPY) -> LeafField:
    """Equilibria averaged over the reconstructed finest subcells of each leaf."""
    fine = reconstruct_finest(field, gamma, boundary)
    eq_fine = spec.equilibrium_moments(spec.conserved(fine))
    m = spec.moments(field.values)
    m_eq = leaf_means(field.tree, eq_fine)
    return LeafField(field.tree, spec.populations(spec.relax(m, m_eq)))


def stream_shift(w: int, delta: int) -> int:
    """Offset ``(1/2 - delta) * sign(w) - 1/2`` of the flux cells for velocity ``w``."""
    sign = (w > 0) - (w < 0)
    return ((1 - 2 * delta) * sign - 1) // 2


def adaptive_stream(field: LeafField, spec: SchemeSpec, gamma: int = 1, boundary=BoundaryMode.COPY) -> LeafField:
    """Transport on the leaves as a balance of reconstructed fluxes through the two leaf edges."""
    boundary = as_boundary(boundary)
    tree = field.tree
    g = tree.geometry
    fine = reconstruct_finest(field, gamma, boundary)
    js, ks = tree.leaf_arrays
    width = 1 << (g.max_level - js)
    start = ks * width
    end = start + width
    out = field.values.copy()
    for h, w in enumerate(spec.velocities):
        if w == 0:
            continue
        sign = 1 if w > 0 else -1
        acc = np.zeros(js.size)
        for delta in range(1, abs(w) + 1):
            eta = stream_shift(w, delta)
            acc += fine[boundary.map_index(start + eta, g.n_finest), h] - fine[boundary.map_index(end + eta, g.n_finest), h]
        out[:, h] = field.values[:, h] + sign * acc / width
    return LeafField(tree, out)


def stream_by_projection(field: LeafField, spec: SchemeSpec, gamma: int = 1, boundary=BoundaryMode.COPY) -> LeafField:
    """Reconstruct, stream the finest lattice, then average back onto the leaves."""
    fine = reconstruct_finest(field, gamma, boundary)
    return LeafField(field.tree, leaf_means(field.tree, stream_uniform(fine, spec, boundary)))


def adaptive_step(state: AdaptiveState) -> AdaptiveState:
    """Mesh adaptation with the details at ``t^n``, then collision and stream on the new leaves."""
    tree, field = adapt_mesh(state.tree, state.field, state.policy, state.boundary)
    if state.collision is CollisionMode.LEAVES:
        field = collide_leaves(field, state.spec)
    else:
        field = collide_reconstructed(field, state.spec, state.gamma, state.boundary)
    field = adaptive_stream(field, state.spec, state.gamma, state.boundary)
    return dataclasses.replace(state, tree=tree, field=field, n=state.n + 1)


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------


def make_policy(config: RunConfig, spec: SchemeSpec) -> ThresholdPolicy:
    return ThresholdPolicy(config.epsilon, config.max_level, config.mu_bar, config.gamma, spec.sigma)


def reference_trajectory(config: RunConfig) -> np.ndarray:
    """Conserved moments of the uniform scheme at every step, shape ``(N+1, n_finest, q_cons)``."""
    config = config.validate()
    spec = config.build_scheme()
    g = config.geometry
    N = n_steps(config.T, time_step(g, spec.lam))
    F = spec.equilibrium_populations(config.initial_datum().on_geometry(g))
    out = np.empty((N + 1, g.n_finest, spec.q_cons))
    out[0] = spec.conserved(F)
    for n in range(N):
        F = step_uniform(F, spec, config.boundary)
        out[n + 1] = spec.conserved(F)
    return out


def run(config: RunConfig, reference: np.ndarray | None = None, with_reference: bool = True,
        track_defect: bool = False) -> ErrorReport:
    """Advance an adaptive simulation from the full finest grid to ``config.T``.

    The uniform reference scheme is stepped in lockstep from the same
    initial data unless a precomputed ``reference`` trajectory is given.
    With ``track_defect`` the local one-step error
    ``|| L(rec f^n) - rec f^{n+1} ||`` over all populations is recorded.
    """
    config = config.validate()
    spec = config.build_scheme()
    g = config.geometry
    dt = time_step(g, spec.lam)
    N = n_steps(config.T, dt)
    boundary = as_boundary(config.boundary)
    conserved0 = config.initial_datum().on_geometry(g)
    state = initial_state(g, spec, conserved0, make_policy(config, spec), config.collision, boundary)
    if reference is not None and reference.shape[0] != N + 1:
        raise ValueError(f"reference trajectory has {reference.shape[0]} steps, expected {N + 1}")
    with_reference = with_reference or reference is not None
    F_ref = state.field.values.copy() if with_reference and reference is None else None
    exact = config.has_exact_solution()

    t = dt * np.arange(N + 1)
    e = np.zeros((N + 1, spec.q_cons)) if with_reference else None
    E = np.zeros((N + 1, spec.q_cons)) if (exact and with_reference) else None
    compression = np.zeros(N + 1)
    leaves = np.zeros(N + 1, dtype=int)
    defect = np.zeros(N) if track_defect else None

    def record(n, st, rec_f):
        compression[n] = compression_factor(st.tree)
        leaves[n] = st.tree.n_complete_leaves
        if not with_reference:
            return None
        ref = reference[n] if reference is not None else spec.conserved(F_ref)
        adaptive = spec.conserved(rec_f)
        e[n] = weighted_l1_columns(ref, adaptive, g.dx)
        if E is not None:
            E[n] = weighted_l1_columns(exact_scalar_solution(config.datum, t[n]).on_geometry(g), ref, g.dx)
        return ref, adaptive

    rec = state.reconstruct()
    last = record(0, state, rec)
    for n in range(N):
        new_state = adaptive_step(state)
        new_rec = new_state.reconstruct()
        if track_defect:
            defect[n] = weighted_l1(step_uniform(rec, spec, boundary), new_rec, g.dx)
        if F_ref is not None:
            F_ref = step_uniform(F_ref, spec, boundary)
        state, rec = new_state, new_rec
        last = record(n + 1, state, rec)

    report = ErrorReport(t=t, e=e, E=E, compression=compression, leaves=leaves, defect=defect,
                         final_state=state)
    report.final_adaptive = spec.conserved(rec)
    if last is not None:
        report.final_reference = last[0]
        report.adaptive_equals_reference = bool(np.max(np.abs(e)) <= 1e-12 * max(1.0, np.abs(last[0]).max()))
    return report


# ---------------------------------------------------------------------------
# estimator facade
# ---------------------------------------------------------------------------


class AdaptiveLBM(BaseEstimator):
    """Adaptive multiresolution lattice Boltzmann solver.

    ``fit(X)`` starts from conserved moments ``X`` given on the finest
    cells (full tree) and advances to time ``T``.
    ``predict(x)`` samples the reconstructed conserved moments at points ``x``.

    Parameters
    ----------
    scheme : SchemeSpec
    epsilon : float
        Finest-level threshold.
    mu_bar : float
        Regularity guess used to refine ahead of shocks (``inf`` allowed).
    gamma : int
        Prediction stencil radius.
    min_level, max_level : int
    domain : tuple of float
    T : float
    collision : {"leaves", "reconstructed"}
    boundary : {"copy", "periodic"}
    root_cells : int
        Cells at level 0; level ``j`` has ``root_cells * 2**j`` cells.
    """

    def __init__(self, scheme=None, epsilon=1e-4, mu_bar=float("inf"), gamma=1, min_level=2, max_level=9,
                 domain=(-3.0, 3.0), T=0.4, collision="leaves", boundary="copy", root_cells=1):
        self.scheme = scheme
        self.epsilon = epsilon
        self.mu_bar = mu_bar
        self.gamma = gamma
        self.min_level = min_level
        self.max_level = max_level
        self.domain = domain
        self.T = T
        self.collision = collision
        self.boundary = boundary
        self.root_cells = root_cells

    def fit(self, X, y=None):
        if not isinstance(self.scheme, SchemeSpec):
            raise ValueError("scheme must be a SchemeSpec")
        lo, hi = check_levels(self.min_level, self.max_level)
        a, b = self.domain
        geometry = MeshGeometry(float(a), float(b), lo, hi, self.root_cells)
        X = check_field(X, geometry.n_finest, n_features=self.scheme.q_cons)
        policy = ThresholdPolicy(check_epsilon(self.epsilon), hi, check_mu_bar(self.mu_bar), check_gamma(self.gamma),
                                 self.scheme.sigma)
        state = initial_state(geometry, self.scheme, X, policy, CollisionMode(self.collision), self.boundary)
        N = n_steps(self.T, time_step(geometry, self.scheme.lam))
        compression = [compression_factor(state.tree)]
        for _ in range(N):
            state = adaptive_step(state)
            compression.append(compression_factor(state.tree))
        self.state_ = state
        self.geometry_ = geometry
        self.n_steps_ = N
        self.compression_history_ = np.array(compression)
        self.compression_ = compression[-1]
        self.moments_ = self.scheme.conserved(state.reconstruct())
        return self

    def predict(self, x):
        check_is_fitted(self, "state_")
        g = self.geometry_
        x = np.asarray(x, dtype=float)
        k = np.clip(np.floor((x - g.a) / g.dx).astype(int), 0, g.n_finest - 1)
        return self.moments_[k]
