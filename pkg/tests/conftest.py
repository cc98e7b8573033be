import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from mrlbm.dyadic_mesh import CellIndex, MeshGeometry, MeshTree, grade

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def geometry():
    return MeshGeometry(-3.0, 3.0, 2, 9)


@st.composite
def trees(draw, min_level=2, max_level=6, root_cells=1, gamma=None):
    """Random trees over a small geometry; graded with radius ``gamma`` when given."""
    g = MeshGeometry(0.0, 1.0, min_level, max_level, root_cells)
    idx = draw(st.lists(st.integers(min_level + 1, max_level).flatmap(
        lambda j: st.tuples(st.just(j), st.integers(0, g.n_cells(j) - 1))), max_size=12))
    tree = MeshTree.from_indices(g, idx)
    return grade(tree, gamma) if gamma else tree


def brute_complete(tree):
    """Complete tree by set enumeration: every stored index plus its brother."""
    g = tree.geometry
    out = set()
    for c in tree.indices():
        out.add(c)
        if c.j > g.min_level:
            out.add(c.brother())
    return out


def brute_complete_leaves(tree):
    r = brute_complete(tree)
    return {c for c in r if not any(ch in r for ch in c.children())}


def brute_grade(tree, gamma, boundary="copy"):
    """Fixed-point closure of the grading rule on index sets."""
    g = tree.geometry
    cells = brute_complete(tree)
    changed = True
    while changed:
        changed = False
        for c in list(cells):
            if c.j == g.min_level:
                continue
            n = g.n_cells(c.j - 1)
            for d in range(-gamma, gamma + 1):
                k = c.k // 2 + d
                k = k % n if boundary == "periodic" else min(max(k, 0), n - 1)
                for new in (CellIndex(c.j - 1, k), CellIndex(c.j - 1, k ^ 1)):
                    if new.j >= g.min_level and new not in cells:
                        cells.add(new)
                        changed = True
    return cells


def random_field(tree, q, seed=0):
    from mrlbm.multiresolution import LeafField
    rng = np.random.default_rng(seed)
    return LeafField(tree, rng.normal(size=(tree.n_complete_leaves, q)))
