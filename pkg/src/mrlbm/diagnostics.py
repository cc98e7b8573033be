"""Experiment drivers: detail decay, threshold sweeps, collision comparison, error accumulation."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from .adaptive_solver import reference_trajectory, run
from .config import RunConfig
from .dyadic_mesh import MeshGeometry, MeshTree
from .lbm_core import continuity_constant_advection
from .metrics import (
    ErrorReport,
    Fit,
    compression_factor,
    exponential_bound,
    linear_fit,
    loglog_fit,
    weighted_l1,
    weighted_l1_columns,
)
from .models import Piece, piecewise_cell_averages
from .multiresolution import LeafField, compute_details

logger = logging.getLogger(__name__)

CACHE_ENV = "MRLBM_CACHE"

# ---------------------------------------------------------------------------
# detail decay
# ---------------------------------------------------------------------------


def _decay_primitive_sqrt(x):
    x = np.clip(x, 0.0, 1.0)
    return (2.0 / 3.0) * x**1.5


def decay_field_averages(field_id: int, edges: np.ndarray) -> np.ndarray:
    """Exact cell averages of the four regularity probes.

    0: ``exp(-20 x^2)``; 1: hat on ``[-1, 1]``; 2: ``sqrt(x)`` on ``[0, 1]``
    continued by ``3/2 - x/2`` on ``[1, 3]``; 3: ``(1 + x)/2`` on ``[-1, 1]``.
    """
    lo, hi = edges[:-1], edges[1:]
    if field_id == 0:
        r = np.sqrt(20.0)
        return (np.sqrt(np.pi) / (2 * r)) * (erf(r * hi) - erf(r * lo)) / (hi - lo)
    if field_id == 1:
        return piecewise_cell_averages([Piece(-1.0, 0.0, (1.0, 1.0)), Piece(0.0, 1.0, (1.0, -1.0))], edges)
    if field_id == 2:
        root = (_decay_primitive_sqrt(hi) - _decay_primitive_sqrt(lo)) / (hi - lo)
        return root + piecewise_cell_averages([Piece(1.0, 3.0, (1.5, -0.5))], edges)
    if field_id == 3:
        return piecewise_cell_averages([Piece(-1.0, 1.0, (0.5, 0.5))], edges)
    raise ValueError(f"field_id must be 0, 1, 2 or 3, got {field_id}")


@dataclass(frozen=True)
class DecayRow:
    level: int
    detail: float
    ratio: float  # detail / detail at level + 1; nan on the finest row


def detail_decay_study(field_id: int, gamma: int = 1, min_level: int = 2, max_level: int = 17,
                       domain=(-3.0, 3.0)) -> list[DecayRow]:
    """Largest detail per level on the full tree, with consecutive-level ratios.

    Level ``j`` cells have width ``2**-j``, so the domain length must be a
    positive integer.
    """
    a, b = float(domain[0]), float(domain[1])
    if not (b > a and float(b - a).is_integer()):
        raise ValueError(f"domain length must be a positive integer, got [{a}, {b}]")
    g = MeshGeometry(a, b, min_level, max_level, int(b - a))
    edges = g.a + g.dx * np.arange(g.n_finest + 1)
    values = decay_field_averages(field_id, edges)[:, None]
    details = compute_details(LeafField(MeshTree.full(g), values), gamma)
    d = {j: float(np.nanmax(details.max_abs(j))) for j in range(min_level + 1, max_level + 1)}
    rows = []
    for j in sorted(d):
        nxt = d.get(j + 1)
        rows.append(DecayRow(j, d[j], d[j] / nxt if nxt else float("nan")))
    return rows


# ---------------------------------------------------------------------------
# reference cache
# ---------------------------------------------------------------------------


def cache_dir() -> Path | None:
    path = os.environ.get(CACHE_ENV)
    return Path(path) if path else None


def cached_reference(config: RunConfig, directory: Path | str | None = None) -> np.ndarray:
    """Reference trajectory, read from or written to an ``.npz`` keyed by the config hash."""
    config = config.validate()
    directory = Path(directory) if directory is not None else cache_dir()
    if directory is None:
        return reference_trajectory(config)
    path = directory / f"reference-{config.reference_key()}.npz"
    if path.exists():
        with np.load(path) as data:
            return data["moments"]
    traj = reference_trajectory(config)
    directory.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npz")
    np.savez_compressed(tmp, moments=traj)
    tmp.replace(path)
    return traj


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    epsilons: np.ndarray
    e_final: np.ndarray  # (n_eps, q_cons)
    compression_final: np.ndarray
    leaves_final: np.ndarray
    reports: list

    @property
    def slopes(self) -> np.ndarray:
        """Log-log slope of the final error against epsilon, per conserved moment."""
        return np.array([loglog_fit(self.epsilons, self.e_final[:, h]).slope for h in range(self.e_final.shape[1])])


def epsilon_sweep(config: RunConfig, epsilons, workers: int | None = None, reference=None) -> SweepResult:
    """One adaptive run per threshold against a single shared reference trajectory."""
    config = config.validate()
    epsilons = np.asarray(sorted(epsilons, reverse=True), dtype=float)
    if reference is None:
        reference = cached_reference(config)

    def one(eps):
        return run(config.replace(epsilon=float(eps)), reference=reference)

    workers = workers or min(len(epsilons), os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(one, epsilons))
    else:
        reports = [one(e) for e in epsilons]
    return SweepResult(
        epsilons=epsilons,
        e_final=np.array([r.e_final for r in reports]),
        compression_final=np.array([r.compression[-1] for r in reports]),
        leaves_final=np.array([r.leaves[-1] for r in reports]),
        reports=reports,
    )


def compare_collision(config: RunConfig, epsilons, workers: int | None = None) -> dict[str, SweepResult]:
    """Identical sweeps with the leaves and the reconstructed collision."""
    config = config.validate()
    reference = cached_reference(config)
    return {mode: epsilon_sweep(config.replace(collision=mode), epsilons, workers, reference)
            for mode in ("leaves", "reconstructed")}


def ratio_table(tests, s_values, epsilon: float = 1e-4, base=None) -> dict[tuple[str, float], float]:
    """Final ``E/e`` for the first conserved moment over a grid of tests and relaxation rates."""
    from .config import preset

    out = {}
    for test in tests:
        for s in s_values:
            cfg = preset(test, s=float(s), epsilon=epsilon, **(base or {}))
            out[(test, float(s))] = float(run(cfg).ratio_final[0])
    return out


# ---------------------------------------------------------------------------
# accumulation in time
# ---------------------------------------------------------------------------


@dataclass
class AccumulationStudy:
    report: ErrorReport
    linear: Fit
    c_mr: float
    c_l: float
    bound: np.ndarray

    @property
    def below_bound(self) -> bool:
        return bool(np.all(self.report.e[:, 0] <= self.bound))


def accumulation_study(config: RunConfig, c_l: float | None = None) -> AccumulationStudy:
    """Growth of ``e^{0,n}`` against the exponential bound.

    ``C_MR`` is fitted as the largest measured one-step defect divided by
    ``epsilon``; ``C_L`` defaults to the closed form for D1Q2 advection.
    """
    config = config.validate()
    report = run(config, track_defect=True)
    if c_l is None:
        if not (config.scheme == "d1q2" and config.flux == "advection"):
            raise ValueError("pass c_l explicitly for schemes other than D1Q2 advection")
        c_l = continuity_constant_advection(config.c, config.lam, config.s)
    n = np.arange(report.n_steps + 1)
    c_mr = float(report.defect.max() / config.epsilon)
    return AccumulationStudy(report, linear_fit(n, report.e[:, 0]), c_mr, c_l,
                             exponential_bound(n, c_mr, config.epsilon, c_l))


__all__ = [
    "AccumulationStudy",
    "DecayRow",
    "ErrorReport",
    "Fit",
    "SweepResult",
    "accumulation_study",
    "cached_reference",
    "compare_collision",
    "compression_factor",
    "decay_field_averages",
    "detail_decay_study",
    "epsilon_sweep",
    "exponential_bound",
    "linear_fit",
    "loglog_fit",
    "ratio_table",
    "weighted_l1",
    "weighted_l1_columns",
]
