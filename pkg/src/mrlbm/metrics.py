"""Error norms, compression and simple least-squares fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic_mesh import MeshTree


def weighted_l1(u, v, dx: float) -> float:
    """``dx * sum |u - v|`` over every entry (cells and, if present, populations)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    return float(dx * np.abs(u - v).sum())


def weighted_l1_columns(u, v, dx: float) -> np.ndarray:
    """Weighted l1 distance per column of two ``(n_cells, q)`` arrays."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    return dx * np.abs(u - v).reshape(u.shape[0], -1).sum(axis=0)


def compression_factor(tree: MeshTree) -> float:
    """Percentage of finest cells saved by storing data on the complete leaves."""
    return 100.0 * (1.0 - tree.n_complete_leaves / tree.geometry.n_finest)


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r2: float


def linear_fit(x, y) -> Fit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return Fit(float(slope), float(intercept), r2)


def loglog_fit(x, y) -> Fit:
    """Least squares on ``log10 y`` against ``log10 x``."""
    return linear_fit(np.log10(x), np.log10(y))


def exponential_bound(n, c_mr: float, epsilon: float, c_l: float) -> np.ndarray:
    """Accumulated-error bound after ``n`` steps for local error ``c_mr * epsilon`` and continuity ``c_l``."""
    n = np.asarray(n, dtype=float)
    extra = c_l - 1.0
    if extra <= 0:
        return c_mr * epsilon * (n + 1.0)
    return c_mr * epsilon * (1.0 + np.expm1(extra * n) / extra)


@dataclass
class ErrorReport:
    """Per-step diagnostics of one adaptive run.

    ``e[n, h]`` is the weighted l1 distance between reference and adaptive
    conserved moment ``h`` at step ``n``; ``E[n, h]`` the distance between the
    reference and the exact solution (``None`` without exact solution).
    """

    t: np.ndarray
    e: np.ndarray | None
    E: np.ndarray | None
    compression: np.ndarray
    leaves: np.ndarray
    defect: np.ndarray | None = None
    final_adaptive: np.ndarray | None = field(default=None, repr=False)
    final_reference: np.ndarray | None = field(default=None, repr=False)
    final_state: object = field(default=None, repr=False)
    adaptive_equals_reference: bool | None = None

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    @property
    def e_final(self) -> np.ndarray:
        return self.e[-1]

    @property
    def E_final(self) -> np.ndarray | None:
        return None if self.E is None else self.E[-1]

    @property
    def ratio_final(self) -> np.ndarray:
        return self.E[-1] / self.e[-1]
