import numpy as np
import pytest
from conftest import brute_complete, brute_complete_leaves, brute_grade, trees
from hypothesis import given
from hypothesis import strategies as st

from mrlbm.dyadic_mesh import BoundaryMode, CellIndex, MeshGeometry, MeshTree, grade


def enumerate_nabla(min_level, max_level):
    return [(j, k) for j in range(min_level, max_level + 1) for k in range(2**j) if j == min_level or k % 2 == 0]


@pytest.mark.parametrize("lo,hi", [(0, 1), (2, 2), (2, 9), (1, 6)])
def test_full_tree_matches_enumeration(lo, hi):
    tree = MeshTree.full(MeshGeometry(0.0, 1.0, lo, hi))
    assert tree.indices() == {CellIndex(*c) for c in enumerate_nabla(lo, hi)}


def test_full_tree_sizes():
    assert MeshTree.full(MeshGeometry(0.0, 1.0, 0, 1)).indices() == {(0, 0), (1, 0)}
    assert len(MeshTree.full(MeshGeometry(0.0, 1.0, 2, 2))) == 4
    assert len(MeshTree.full(MeshGeometry(-3.0, 3.0, 2, 9))) == 512


def test_root_cells_scale_every_level():
    g = MeshGeometry(-3.0, 3.0, 2, 9, root_cells=6)
    assert g.n_finest == 3072
    assert g.dx == pytest.approx(2.0**-9)
    assert MeshTree.full(g).n_complete_leaves == 3072


def test_single_fine_index_adds_brother():
    g = MeshGeometry(0.0, 1.0, 2, 3)
    tree = MeshTree.from_indices(g, [(3, 4)])
    assert {(3, 4), (3, 5)} <= tree.complete_tree()


def test_complete_tree_examples():
    g = MeshGeometry(0.0, 1.0, 2, 3)
    assert MeshTree.coarsest(g).complete_tree() == MeshTree.coarsest(g).indices()
    assert len(MeshTree.full(g).complete_tree()) == 12


def test_complete_leaves_examples():
    g = MeshGeometry(0.0, 1.0, 2, 3)
    assert MeshTree.coarsest(g).complete_leaves() == {(2, k) for k in range(4)}
    assert MeshTree.full(MeshGeometry(0.0, 1.0, 2, 5)).complete_leaves() == {(5, k) for k in range(32)}
    tree = MeshTree.from_indices(g, [(3, 0)])
    assert tree.complete_leaves() == {(3, 0), (3, 1), (2, 1), (2, 2), (2, 3)}


def test_odd_positions_rejected():
    g = MeshGeometry(0.0, 1.0, 2, 3)
    masks = [np.ones(4, bool), np.zeros(8, bool)]
    masks[1][3] = True
    with pytest.raises(ValueError, match="odd"):
        MeshTree(g, masks)


def test_invalid_geometry():
    with pytest.raises(ValueError):
        MeshGeometry(1.0, 0.0, 2, 3)
    with pytest.raises(ValueError):
        MeshGeometry(0.0, 1.0, 4, 3)
    with pytest.raises(ValueError):
        MeshGeometry(0.0, 1.0, 2, 21)
    with pytest.raises(ValueError):
        MeshGeometry(0.0, 1.0, 2, 3, root_cells=0)


def test_grade_forces_stencil_fathers():
    g = MeshGeometry(0.0, 1.0, 2, 4)
    tree = MeshTree.from_indices(g, [(3, 2), (4, 4)])
    graded = grade(tree, 1)
    assert (3, 0) in graded
    assert {(3, 1), (3, 2), (3, 3)} <= graded.complete_tree()
    assert graded.is_graded(1)


def test_grade_full_tree_is_fixed():
    g = MeshGeometry(0.0, 1.0, 2, 6)
    assert grade(MeshTree.full(g), 2) == MeshTree.full(g)


@given(trees())
def test_complete_sets_match_brute_force(tree):
    assert tree.complete_tree() == brute_complete(tree)
    assert tree.complete_leaves() == brute_complete_leaves(tree)


@given(trees(), st.integers(1, 3), st.sampled_from(["copy", "periodic"]))
def test_grade_matches_fixed_point_closure(tree, gamma, boundary):
    assert grade(tree, gamma, boundary).complete_tree() == brute_grade(tree, gamma, boundary)


@given(trees(), st.integers(1, 3), st.sampled_from(["copy", "periodic"]))
def test_grade_closure_properties(tree, gamma, boundary):
    graded = grade(tree, gamma, boundary)
    assert tree.issubset(graded)
    assert graded.is_graded(gamma, boundary) and graded.is_tree()
    assert grade(graded, gamma, boundary) == graded


@given(trees(), trees(), st.integers(1, 3))
def test_grade_is_monotone(a, b, gamma):
    union = a.union(b)
    assert grade(a, gamma).issubset(grade(union, gamma))


@given(trees(root_cells=3, gamma=1))
def test_complete_leaves_partition_domain(tree):
    g = tree.geometry
    js, ks = tree.leaf_arrays
    widths = 1 << (g.max_level - js)
    starts = ks * widths
    assert starts[0] == 0
    np.testing.assert_array_equal(starts[1:], (starts + widths)[:-1])
    assert (starts + widths)[-1] == g.n_finest


def test_boundary_mapping():
    k = np.array([-2, -1, 0, 7, 8, 9])
    np.testing.assert_array_equal(BoundaryMode.COPY.map_index(k, 8), [0, 0, 0, 7, 7, 7])
    np.testing.assert_array_equal(BoundaryMode.PERIODIC.map_index(k, 8), [6, 7, 0, 7, 0, 1])
