"""Input checks shared by the estimators and the configuration layer."""

from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_array

from .dyadic_mesh import MAX_LEVEL


def check_gamma(gamma) -> int:
    if gamma not in (1, 2, 3):
        raise ValueError(f"prediction radius gamma must be 1, 2 or 3, got {gamma!r}")
    return int(gamma)


def check_levels(min_level, max_level) -> tuple[int, int]:
    min_level, max_level = int(min_level), int(max_level)
    if not 0 <= min_level < max_level <= MAX_LEVEL:
        raise ValueError(
            f"levels must satisfy 0 <= min_level < max_level <= {MAX_LEVEL}, got {min_level}, {max_level}"
        )
    return min_level, max_level


def check_epsilon(epsilon) -> float:
    epsilon = float(epsilon)
    if not epsilon >= 0 or math.isinf(epsilon):
        raise ValueError(f"epsilon must be a finite number >= 0, got {epsilon}")
    return epsilon


def check_mu_bar(mu_bar) -> float:
    if isinstance(mu_bar, str):
        if mu_bar.strip().lower() in ("inf", "infinity", "oo"):
            return math.inf
        mu_bar = float(mu_bar)
    mu_bar = float(mu_bar)
    if mu_bar < 0 or math.isnan(mu_bar):
        raise ValueError(f"mu_bar must be >= 0, got {mu_bar}")
    return mu_bar


def check_relaxation(s) -> float:
    s = float(s)
    if not 0 < s <= 2:
        raise ValueError(f"relaxation rate must lie in (0, 2], got {s}")
    return s


def check_field(X, n_cells: int, n_features: int | None = None) -> np.ndarray:
    """Finest-level cell averages as a 2-D float array of ``n_cells`` rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[0] != n_cells:
        raise ValueError(f"expected {n_cells} finest cells, got {X.shape[0]}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} columns, got {X.shape[1]}")
    return X
