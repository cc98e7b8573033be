"""Nested dyadic lattices, trees of cell indices and the grading closure.

A tree is stored level by level as boolean masks over the
``root_cells * 2**j`` cells of each lattice.  Above the coarsest level only
even positions may be set: the odd brother carries a redundant detail and is
implied by the even one.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, NamedTuple

import numpy as np

MAX_LEVEL = 20


class BoundaryMode(str, Enum):
    """How stencils that leave the domain are mapped back onto it."""

    COPY = "copy"
    PERIODIC = "periodic"

    def map_index(self, k, n):
        """Map (possibly out of range) positions ``k`` onto ``[0, n)``."""
        if self is BoundaryMode.PERIODIC:
            return np.mod(k, n)
        return np.clip(k, 0, n - 1)


def as_boundary(boundary) -> BoundaryMode:
    if isinstance(boundary, BoundaryMode):
        return boundary
    try:
        return BoundaryMode(str(boundary).lower())
    except ValueError:
        raise ValueError(f"unknown boundary mode {boundary!r}; expected 'copy' or 'periodic'") from None


class CellIndex(NamedTuple):
    """Level/position pair ``(j, k)`` of the dyadic cell ``I_{j,k}``."""

    j: int
    k: int

    def parent(self) -> "CellIndex":
        return CellIndex(self.j - 1, self.k // 2)

    def children(self) -> tuple["CellIndex", "CellIndex"]:
        return CellIndex(self.j + 1, 2 * self.k), CellIndex(self.j + 1, 2 * self.k + 1)

    def brother(self) -> "CellIndex":
        return CellIndex(self.j, self.k ^ 1)


@dataclass(frozen=True)
class MeshGeometry:
    """Domain ``[a, b]`` with the range of admissible levels.

    Level ``j`` splits the domain into ``root_cells * 2**j`` equal cells.  With
    the default ``root_cells = 1`` the finest lattice has ``2**max_level``
    cells; ``root_cells = b - a`` gives cells of width ``2**-j`` instead.
    """

    a: float
    b: float
    min_level: int
    max_level: int
    root_cells: int = 1

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"domain requires a < b, got [{self.a}, {self.b}]")
        if not 0 <= self.min_level <= self.max_level <= MAX_LEVEL:
            raise ValueError(
                f"levels must satisfy 0 <= min_level <= max_level <= {MAX_LEVEL}, "
                f"got {self.min_level}, {self.max_level}"
            )
        if int(self.root_cells) != self.root_cells or self.root_cells < 1:
            raise ValueError(f"root_cells must be a positive integer, got {self.root_cells}")
        object.__setattr__(self, "root_cells", int(self.root_cells))

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def n_levels(self) -> int:
        return self.max_level - self.min_level + 1

    @property
    def levels(self) -> range:
        return range(self.min_level, self.max_level + 1)

    def n_cells(self, j: int) -> int:
        return self.root_cells << j

    @property
    def n_finest(self) -> int:
        return self.n_cells(self.max_level)

    @property
    def dx(self) -> float:
        return self.cell_width(self.max_level)

    def cell_width(self, j: int) -> float:
        return (self.b - self.a) / self.n_cells(j)

    def cell_bounds(self, j: int, k) -> tuple:
        w = self.cell_width(j)
        k = np.asarray(k)
        return self.a + w * k, self.a + w * (k + 1)

    def centers(self, j: int) -> np.ndarray:
        return self.a + self.cell_width(j) * (np.arange(self.n_cells(j)) + 0.5)

    def contains(self, idx: CellIndex) -> bool:
        return self.min_level <= idx.j <= self.max_level and 0 <= idx.k < self.n_cells(idx.j)


class MeshTree:
    """A set of indices ``Lambda`` inside the admissible set ``nabla``.

    ``masks[i]`` flags membership at level ``min_level + i``.  Instances are
    treated as immutable; all operators return new trees.
    """

    __slots__ = ("geometry", "_masks", "_cache")

    def __init__(self, geometry: MeshGeometry, masks):
        masks = [np.array(m, dtype=bool) for m in masks]
        if len(masks) != geometry.n_levels:
            raise ValueError("one mask per level is required")
        for j, m in zip(geometry.levels, masks):
            if m.shape != (geometry.n_cells(j),):
                raise ValueError(f"mask at level {j} must have length {geometry.n_cells(j)}")
            if j > geometry.min_level and m[1::2].any():
                raise ValueError(f"odd positions stored at level {j}; only even k are admissible")
            m.setflags(write=False)
        if not masks[0].all():
            raise ValueError("the coarsest level must wholly belong to the tree")
        self.geometry = geometry
        self._masks = tuple(masks)
        self._cache = {}

    # -- construction -----------------------------------------------------
    @classmethod
    def full(cls, geometry: MeshGeometry) -> "MeshTree":
        masks = []
        for j in geometry.levels:
            m = np.ones(geometry.n_cells(j), dtype=bool)
            if j > geometry.min_level:
                m[1::2] = False
            masks.append(m)
        return cls(geometry, masks)

    @classmethod
    def coarsest(cls, geometry: MeshGeometry) -> "MeshTree":
        masks = [np.zeros(geometry.n_cells(j), dtype=bool) for j in geometry.levels]
        masks[0][:] = True
        return cls(geometry, masks)

    @classmethod
    def from_indices(cls, geometry: MeshGeometry, indices: Iterable) -> "MeshTree":
        """Build a tree from indices; odd positions are stored as their even brother."""
        masks = [np.zeros(geometry.n_cells(j), dtype=bool) for j in geometry.levels]
        masks[0][:] = True
        for j, k in indices:
            idx = CellIndex(int(j), int(k))
            if not geometry.contains(idx):
                raise ValueError(f"index {idx} outside the admissible set")
            if idx.j > geometry.min_level:
                k = idx.k - idx.k % 2
            masks[idx.j - geometry.min_level][k] = True
        return cls(geometry, masks)

    # -- raw level data ---------------------------------------------------
    def mask(self, j: int) -> np.ndarray:
        return self._masks[j - self.geometry.min_level]

    @property
    def masks(self) -> tuple:
        return self._masks

    def complete_mask(self, j: int) -> np.ndarray:
        return self.complete_masks[j - self.geometry.min_level]

    @property
    def complete_masks(self) -> tuple:
        if "complete" not in self._cache:
            out = [self._masks[0].copy()]
            for m in self._masks[1:]:
                out.append(np.repeat(m[0::2], 2))
            self._cache["complete"] = tuple(out)
        return self._cache["complete"]

    @property
    def complete_leaf_masks(self) -> tuple:
        """Cells of the complete tree without a child in the complete tree."""
        if "leaf" not in self._cache:
            r = self.complete_masks
            out = []
            for i in range(len(r)):
                m = r[i].copy()
                if i + 1 < len(r):
                    m &= ~r[i + 1][0::2]
                out.append(m)
            self._cache["leaf"] = tuple(out)
        return self._cache["leaf"]

    @property
    def leaf_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Levels and positions of the complete leaves, ordered left to right."""
        if "leaf_arrays" not in self._cache:
            g = self.geometry
            js, ks, starts = [], [], []
            for j, m in zip(g.levels, self.complete_leaf_masks):
                k = np.flatnonzero(m)
                js.append(np.full(k.size, j, dtype=np.int64))
                ks.append(k)
                starts.append(k << (g.max_level - j))
            js, ks, starts = np.concatenate(js), np.concatenate(ks), np.concatenate(starts)
            order = np.argsort(starts, kind="stable")
            js, ks = js[order], ks[order]
            js.setflags(write=False)
            ks.setflags(write=False)
            self._cache["leaf_arrays"] = (js, ks)
        return self._cache["leaf_arrays"]

    @property
    def n_complete_leaves(self) -> int:
        return int(sum(int(m.sum()) for m in self.complete_leaf_masks))

    # -- set views --------------------------------------------------------
    def _iter_masks(self, masks) -> Iterator[CellIndex]:
        for j, m in zip(self.geometry.levels, masks):
            for k in np.flatnonzero(m):
                yield CellIndex(j, int(k))

    def indices(self) -> set[CellIndex]:
        return set(self._iter_masks(self._masks))

    def complete_tree(self) -> set[CellIndex]:
        return set(self._iter_masks(self.complete_masks))

    def complete_leaves(self) -> set[CellIndex]:
        return set(self._iter_masks(self.complete_leaf_masks))

    def leaves(self) -> set[CellIndex]:
        return set(self._iter_masks(m & l for m, l in zip(self._masks, self.complete_leaf_masks)))

    def __iter__(self):
        return self._iter_masks(self._masks)

    def __len__(self) -> int:
        return int(sum(int(m.sum()) for m in self._masks))

    def __contains__(self, idx) -> bool:
        j, k = idx
        if not self.geometry.contains(CellIndex(j, k)):
            return False
        return bool(self.mask(j)[k])

    def __eq__(self, other) -> bool:
        if not isinstance(other, MeshTree):
            return NotImplemented
        return self.geometry == other.geometry and all(
            np.array_equal(a, b) for a, b in zip(self._masks, other._masks)
        )

    def __hash__(self):
        return hash((self.geometry, tuple(m.tobytes() for m in self._masks)))

    def __repr__(self) -> str:
        g = self.geometry
        return f"MeshTree(levels={g.min_level}..{g.max_level}, size={len(self)}, leaves={self.n_complete_leaves})"

    def issubset(self, other: "MeshTree") -> bool:
        return all(not (a & ~b).any() for a, b in zip(self._masks, other._masks))

    def union(self, other: "MeshTree") -> "MeshTree":
        return MeshTree(self.geometry, [a | b for a, b in zip(self._masks, other._masks)])

    # -- structural predicates --------------------------------------------
    def is_tree(self) -> bool:
        """No orphan: every stored cell has its father in the complete tree."""
        r = self.complete_masks
        for i in range(1, len(self._masks)):
            k = np.flatnonzero(self._masks[i])
            if not r[i - 1][k // 2].all():
                return False
        return True

    def is_graded(self, gamma: int, boundary=BoundaryMode.COPY) -> bool:
        boundary = as_boundary(boundary)
        r = self.complete_masks
        for i in range(1, len(self._masks)):
            k = np.flatnonzero(self._masks[i])
            n = r[i - 1].size
            for delta in range(-gamma, gamma + 1):
                if not r[i - 1][boundary.map_index(k // 2 + delta, n)].all():
                    return False
        return True


def full_tree(geometry: MeshGeometry) -> MeshTree:
    return MeshTree.full(geometry)


def complete_tree(tree: MeshTree) -> set[CellIndex]:
    return tree.complete_tree()


def leaves(tree: MeshTree) -> set[CellIndex]:
    return tree.leaves()


def complete_leaves(tree: MeshTree) -> set[CellIndex]:
    return tree.complete_leaves()


def _mark_complete(mask: np.ndarray, k: np.ndarray, coarsest: bool) -> None:
    """Put positions ``k`` into the complete tree of one level (in place)."""
    if coarsest:
        return
    mask[k - k % 2] = True


def grade(tree: MeshTree, gamma: int, boundary=BoundaryMode.COPY) -> MeshTree:
    """Smallest graded tree containing ``tree``.

    A single fine-to-coarse sweep suffices: closing level ``j`` only adds
    indices at level ``j - 1``, which are handled when that level is swept.
    The sweep also restores the tree property for inputs with orphans.
    """
    boundary = as_boundary(boundary)
    g = tree.geometry
    masks = [m.copy() for m in tree.masks]
    for i in range(len(masks) - 1, 0, -1):
        k = np.flatnonzero(masks[i])
        if k.size == 0:
            continue
        n = masks[i - 1].size
        fathers = k // 2
        needed = np.concatenate([boundary.map_index(fathers + d, n) for d in range(-gamma, gamma + 1)])
        _mark_complete(masks[i - 1], needed, coarsest=(i - 1 == 0))
    return MeshTree(g, masks)
