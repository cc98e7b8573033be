"""Cell-average multiresolution on dyadic trees.

Projection averages two children, prediction interpolates children from a
centred stencil of ``2*gamma + 1`` parents.  Everything operating on whole
fields works level by level with numpy; the per-cell helpers (:func:`predict`,
:func:`reconstruct`) follow the same arithmetic order so both paths agree
bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_epsilon, check_field, check_gamma, check_levels
from .dyadic_mesh import BoundaryMode, CellIndex, MeshGeometry, MeshTree, as_boundary, grade

PREDICTION_COEFFICIENTS: dict[int, tuple[Fraction, ...]] = {
    1: (Fraction(-1, 8),),
    2: (Fraction(-22, 128), Fraction(3, 128)),
    # c3 must be negative for exactness up to degree 6
    3: (Fraction(-201, 1024), Fraction(11, 256), Fraction(-5, 1024)),
}


@dataclass(frozen=True)
class PredictionSpec:
    gamma: int = 1

    def __post_init__(self):
        check_gamma(self.gamma)

    @property
    def coefficients(self) -> tuple[Fraction, ...]:
        return PREDICTION_COEFFICIENTS[self.gamma]

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.coefficients)

    @property
    def order(self) -> int:
        return 2 * self.gamma + 1

    @property
    def width(self) -> int:
        return 2 * self.gamma


def project(child_even, child_odd):
    return (child_even + child_odd) / 2


def _correction(window, gamma):
    c = PredictionSpec(gamma).weights
    acc = 0.0
    for alpha in range(1, gamma + 1):
        acc = acc + c[alpha - 1] * (window[gamma + alpha] - window[gamma - alpha])
    return acc


def predict(window, gamma: int = 1):
    """Predicted (even, odd) child averages from ``2*gamma + 1`` parents centred on the father."""
    if len(window) != 2 * gamma + 1:
        raise ValueError(f"window must hold {2 * gamma + 1} values for gamma={gamma}")
    acc = _correction(window, gamma)
    centre = window[gamma]
    return centre + acc, centre - acc


def predict_level(values: np.ndarray, gamma: int = 1, boundary=BoundaryMode.COPY) -> np.ndarray:
    """Predict every child at level ``j+1`` from a complete level-``j`` array.

    ``values`` has shape ``(n, q)``; the result has shape ``(2n, q)``.
    """
    boundary = as_boundary(boundary)
    n = values.shape[0]
    c = PredictionSpec(gamma).weights
    idx = np.arange(n)
    acc = np.zeros_like(values)
    for alpha in range(1, gamma + 1):
        right = values[boundary.map_index(idx + alpha, n)]
        left = values[boundary.map_index(idx - alpha, n)]
        acc = acc + c[alpha - 1] * (right - left)
    out = np.empty((2 * n,) + values.shape[1:], dtype=values.dtype)
    out[0::2] = values + acc
    out[1::2] = values - acc
    return out


# ---------------------------------------------------------------------------
# data on trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeafField:
    """Cell averages of ``q`` populations stored on the complete leaves of a tree.

    ``values[i]`` belongs to the ``i``-th complete leaf in left-to-right order
    (see :attr:`MeshTree.leaf_arrays`).
    """

    tree: MeshTree
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        n = self.tree.n_complete_leaves
        if values.ndim != 2 or values.shape[0] != n:
            raise ValueError(f"expected {n} leaf values, got array of shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def q(self) -> int:
        return self.values.shape[1]

    @property
    def levels(self) -> np.ndarray:
        return self.tree.leaf_arrays[0]

    @property
    def positions(self) -> np.ndarray:
        return self.tree.leaf_arrays[1]

    @property
    def widths(self) -> np.ndarray:
        g = self.tree.geometry
        return g.length / g.root_cells * np.ldexp(1.0, -self.levels)

    def as_dict(self) -> dict[CellIndex, np.ndarray]:
        return {CellIndex(int(j), int(k)): v for j, k, v in zip(self.levels, self.positions, self.values)}

    def __getitem__(self, idx) -> np.ndarray:
        j, k = idx
        hit = np.flatnonzero((self.levels == j) & (self.positions == k))
        if hit.size == 0:
            raise KeyError(idx)
        return self.values[hit[0]]

    def integral(self) -> np.ndarray:
        """Sum of width times value over the complete leaves, per population."""
        return self.widths @ self.values

    @classmethod
    def from_mapping(cls, tree: MeshTree, mapping: Mapping) -> "LeafField":
        js, ks = tree.leaf_arrays
        values = [np.atleast_1d(np.asarray(mapping[CellIndex(int(j), int(k))], dtype=float)) for j, k in zip(js, ks)]
        return cls(tree, np.array(values))

    @classmethod
    def from_finest(cls, tree: MeshTree, finest: np.ndarray) -> "LeafField":
        """Average a finest-level array onto the complete leaves of ``tree``."""
        levels = actual_levels_from_finest(tree.geometry, finest)
        return cls(tree, _gather_leaves(tree, levels))


@dataclass(frozen=True)
class DetailField:
    """Details on ``Lambda \\ nabla_{J_}``, kept only for the even brother.

    ``arrays[j]`` has shape ``(n_cells(j), q)``; entries outside the stored indices
    are NaN.
    """

    tree: MeshTree
    arrays: dict = field(repr=False)

    def __getitem__(self, idx) -> np.ndarray:
        j, k = idx
        if (j, k) not in self.tree or j == self.tree.geometry.min_level:
            raise KeyError(idx)
        return self.arrays[j][k]

    def items(self):
        g = self.tree.geometry
        for j in range(g.min_level + 1, g.max_level + 1):
            for k in np.flatnonzero(self.tree.mask(j)):
                yield CellIndex(j, int(k)), self.arrays[j][k]

    def __len__(self) -> int:
        g = self.tree.geometry
        return len(self.tree) - g.n_cells(g.min_level)

    def max_abs(self, j: int) -> np.ndarray:
        """``max_h |d^h_{j,k}|`` for every position of level ``j`` (NaN off the tree)."""
        a = self.arrays[j]
        out = np.full(a.shape[0], np.nan)
        m = self.tree.mask(j)
        out[m] = np.abs(a[m]).max(axis=1)
        return out


@dataclass(frozen=True)
class ThresholdPolicy:
    """Level-wise thresholds ``eps_j = 2**(j - J) * eps`` and enlargement parameters."""

    epsilon: float
    max_level: int
    mu_bar: float = math.inf
    gamma: int = 1
    sigma: int = 1

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.mu_bar < 0:
            raise ValueError(f"mu_bar must be >= 0, got {self.mu_bar}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        check_gamma(self.gamma)

    def level_threshold(self, j: int) -> float:
        return math.ldexp(self.epsilon, j - self.max_level)

    @property
    def mu_effective(self) -> float:
        return min(self.mu_bar, 2 * self.gamma + 1)

    def refinement_threshold(self, j: int) -> float:
        return 2.0 ** (self.mu_effective + 1) * self.level_threshold(j)


# ---------------------------------------------------------------------------
# level arrays
# ---------------------------------------------------------------------------


def actual_levels_from_finest(geometry: MeshGeometry, finest: np.ndarray) -> dict[int, np.ndarray]:
    finest = np.asarray(finest, dtype=float)
    if finest.ndim == 1:
        finest = finest[:, None]
    if finest.shape[0] != geometry.n_finest:
        raise ValueError(f"expected {geometry.n_finest} finest cells, got {finest.shape[0]}")
    out = {geometry.max_level: finest}
    for j in range(geometry.max_level - 1, geometry.min_level - 1, -1):
        child = out[j + 1]
        out[j] = project(child[0::2], child[1::2])
    return out


def _gather_leaves(tree: MeshTree, levels: dict[int, np.ndarray]) -> np.ndarray:
    js, ks = tree.leaf_arrays
    q = next(iter(levels.values())).shape[1]
    out = np.empty((js.size, q))
    for j in np.unique(js):
        sel = js == j
        out[sel] = levels[int(j)][ks[sel]]
    return out


def actual_levels(field: LeafField) -> dict[int, np.ndarray]:
    """Averages on the complete tree: leaf values, projected upwards (NaN elsewhere)."""
    tree = field.tree
    g = tree.geometry
    js, ks = tree.leaf_arrays
    out = {}
    for j in range(g.max_level, g.min_level - 1, -1):
        a = np.full((g.n_cells(j), field.q), np.nan)
        sel = js == j
        a[ks[sel]] = field.values[sel]
        if j < g.max_level:
            inner = tree.complete_mask(j) & ~tree.complete_leaf_masks[j - g.min_level]
            k = np.flatnonzero(inner)
            child = out[j + 1]
            a[k] = project(child[2 * k], child[2 * k + 1])
        out[j] = a
    return out


def complete_levels(field: LeafField, gamma: int = 1, boundary=BoundaryMode.COPY,
                    actual: dict | None = None) -> dict[int, np.ndarray]:
    """Every level filled in: stored averages on the complete tree, detail-free predictions below it."""
    tree = field.tree
    g = tree.geometry
    if actual is None:
        actual = actual_levels(field)
    out = {g.min_level: actual[g.min_level]}
    for j in range(g.min_level + 1, g.max_level + 1):
        predicted = predict_level(out[j - 1], gamma, boundary)
        inside = tree.complete_mask(j)
        out[j] = np.where(inside[:, None], actual[j], predicted)
    return out


def reconstruct_finest(field: LeafField, gamma: int = 1, boundary=BoundaryMode.COPY) -> np.ndarray:
    """Reconstruction of the whole finest level, shape ``(n_finest, q)``."""
    return complete_levels(field, gamma, boundary)[field.tree.geometry.max_level]


def reconstruct(field: LeafField, target, gamma: int = 1, boundary=BoundaryMode.COPY) -> np.ndarray:
    """Reconstructed value at one finest cell by plain recursion over the tree.

    Independent of the level-array machinery; used as its oracle.
    """
    boundary = as_boundary(boundary)
    tree = field.tree
    g = tree.geometry
    j, k = target
    if j != g.max_level:
        raise ValueError(f"reconstruction targets the finest level {g.max_level}, got level {j}")
    stored = field.as_dict()
    leaf_masks = tree.complete_leaf_masks
    cache: dict = {}

    def value(j: int, k: int):
        key = (j, k)
        if key in cache:
            return cache[key]
        if tree.complete_mask(j)[k]:
            if leaf_masks[j - g.min_level][k]:
                v = stored[CellIndex(j, k)]
            else:
                v = project(value(j + 1, 2 * k), value(j + 1, 2 * k + 1))
        else:
            n = g.n_cells(j - 1)
            father = k // 2
            window = [value(j - 1, int(boundary.map_index(father + d, n))) for d in range(-gamma, gamma + 1)]
            even, odd = predict(window, gamma)
            v = odd if k % 2 else even
        cache[key] = v
        return v

    return np.array(value(j, k))


# ---------------------------------------------------------------------------
# transform, thresholding, enlargement
# ---------------------------------------------------------------------------


def compute_details(field: LeafField, gamma: int = 1, boundary=BoundaryMode.COPY,
                    levels: dict | None = None) -> DetailField:
    """Details ``f_{j,k} - hat f_{j,k}`` on the even indices of the tree."""
    tree = field.tree
    g = tree.geometry
    if levels is None:
        levels = complete_levels(field, gamma, boundary)
    arrays = {}
    for j in range(g.min_level + 1, g.max_level + 1):
        d = np.full((g.n_cells(j), field.q), np.nan)
        k = np.flatnonzero(tree.mask(j))
        if k.size:
            predicted = predict_level(levels[j - 1], gamma, boundary)
            d[k] = levels[j][k] - predicted[k]
        arrays[j] = d
    return DetailField(tree, arrays)


def encode(field: LeafField, gamma: int = 1, boundary=BoundaryMode.COPY) -> tuple[np.ndarray, DetailField]:
    """Coarsest averages plus details; lossless on graded trees."""
    if not field.tree.is_graded(gamma, boundary):
        raise ValueError("encode requires a graded tree: a prediction stencil is unavailable")
    levels = complete_levels(field, gamma, boundary)
    coarse = levels[field.tree.geometry.min_level].copy()
    return coarse, compute_details(field, gamma, boundary, levels=levels)


def decode(coarse: np.ndarray, details: DetailField, gamma: int = 1, boundary=BoundaryMode.COPY) -> LeafField:
    tree = details.tree
    g = tree.geometry
    if not tree.is_graded(gamma, boundary):
        raise ValueError("decode requires a graded tree: a prediction stencil is unavailable")
    coarse = np.asarray(coarse, dtype=float)
    if coarse.ndim == 1:
        coarse = coarse[:, None]
    levels = {g.min_level: coarse}
    for j in range(g.min_level + 1, g.max_level + 1):
        a = predict_level(levels[j - 1], gamma, boundary)
        k = np.flatnonzero(tree.mask(j))
        d = details.arrays[j][k]
        a[k] = a[k] + d
        a[k + 1] = a[k + 1] - d
        levels[j] = a
    return LeafField(tree, _gather_leaves(tree, levels))


def threshold(tree: MeshTree, details: DetailField, policy: ThresholdPolicy) -> MeshTree:
    """Keep the coarsest level and every index whose largest detail reaches ``eps_j``."""
    g = tree.geometry
    masks = [tree.mask(g.min_level).copy()]
    for j in range(g.min_level + 1, g.max_level + 1):
        m = tree.mask(j).copy()
        k = np.flatnonzero(m)
        if k.size:
            dmax = details.max_abs(j)[k]
            m[k[~(dmax >= policy.level_threshold(j))]] = False
        masks.append(m)
    return MeshTree(g, masks)


def enlarge(tree_t: MeshTree, details: DetailField, policy: ThresholdPolicy,
            boundary=BoundaryMode.COPY) -> MeshTree:
    """Refine ahead of the solution.

    Neighbours up to ``sigma`` cells away join the complete tree, and cells
    with a detail above ``2**(mu+1) eps_j`` get their four grandchildren-level
    cells ``(j+1, 2k..2k+3)``.  The output is not graded.
    """
    boundary = as_boundary(boundary)
    g = tree_t.geometry
    masks = [m.copy() for m in tree_t.masks]
    r = tree_t.complete_masks
    for i, j in enumerate(g.levels):
        if i == 0 or policy.sigma == 0:
            continue
        k = np.flatnonzero(r[i])
        n = g.n_cells(j)
        for d in range(-policy.sigma, policy.sigma + 1):
            kk = boundary.map_index(k + d, n)
            masks[i][kk - kk % 2] = True
    for i, j in enumerate(g.levels):
        if not g.min_level < j < g.max_level:
            continue
        k = np.flatnonzero(tree_t.masks[i])
        if k.size == 0:
            continue
        hit = k[details.max_abs(j)[k] >= policy.refinement_threshold(j)]
        masks[i + 1][2 * hit] = True
        right = boundary.map_index(2 * hit + 2, g.n_cells(j + 1))
        masks[i + 1][right - right % 2] = True
    return MeshTree(g, masks)


def adapt_mesh(tree: MeshTree, field: LeafField, policy: ThresholdPolicy,
               boundary=BoundaryMode.COPY) -> tuple[MeshTree, LeafField]:
    """One mesh update ``G(H(T(tree)))`` with the field moved onto the new leaves."""
    if field.tree is not tree and field.tree != tree:
        raise ValueError("field does not live on the given tree")
    gamma = policy.gamma
    levels = complete_levels(field, gamma, boundary)
    details = compute_details(field, gamma, boundary, levels=levels)
    kept = threshold(tree, details, policy)
    new_tree = grade(enlarge(kept, details, policy, boundary), gamma, boundary)
    return new_tree, LeafField(new_tree, _gather_leaves(new_tree, levels))


# ---------------------------------------------------------------------------
# estimator facade
# ---------------------------------------------------------------------------


class MRCompressor(TransformerMixin, BaseEstimator):
    """Compress finest-level cell averages onto a graded adaptive tree.

    ``fit`` thresholds the details of ``X`` (shape ``(n_finest, q)``) and
    grades the result; ``transform`` returns the averages on the complete
    leaves of that tree and ``inverse_transform`` reconstructs the finest
    level from them.

    Parameters
    ----------
    epsilon : float
        Threshold on the finest level; coarser levels use ``2**(j-J) * epsilon``.
    min_level, max_level : int
    domain : tuple of float
    gamma : int
        Prediction stencil radius (1, 2 or 3).
    boundary : {"copy", "periodic"}
    root_cells : int
        Cells at level 0; level ``j`` has ``root_cells * 2**j`` cells.
    """

    def __init__(self, epsilon=1e-4, min_level=2, max_level=9, domain=(-3.0, 3.0), gamma=1, boundary="copy",
                 root_cells=1):
        self.epsilon = epsilon
        self.min_level = min_level
        self.max_level = max_level
        self.domain = domain
        self.gamma = gamma
        self.boundary = boundary
        self.root_cells = root_cells

    def _geometry(self) -> MeshGeometry:
        a, b = self.domain
        lo, hi = check_levels(self.min_level, self.max_level)
        return MeshGeometry(float(a), float(b), lo, hi, self.root_cells)

    def fit(self, X, y=None):
        geometry = self._geometry()
        X = check_field(X, geometry.n_finest)
        boundary = as_boundary(self.boundary)
        policy = ThresholdPolicy(check_epsilon(self.epsilon), geometry.max_level, gamma=check_gamma(self.gamma), sigma=0)
        full = LeafField(MeshTree.full(geometry), X)
        details = compute_details(full, self.gamma, boundary)
        self.tree_ = grade(threshold(full.tree, details, policy), self.gamma, boundary)
        self.geometry_ = geometry
        self.n_features_in_ = X.shape[1]
        self.compression_ = 100.0 * (1.0 - self.tree_.n_complete_leaves / geometry.n_finest)
        return self

    def transform(self, X):
        check_is_fitted(self, "tree_")
        X = check_field(X, self.geometry_.n_finest, n_features=self.n_features_in_)
        return LeafField.from_finest(self.tree_, X).values

    def inverse_transform(self, Xt):
        check_is_fitted(self, "tree_")
        leaf = LeafField(self.tree_, Xt)
        return reconstruct_finest(leaf, self.gamma, self.boundary)
