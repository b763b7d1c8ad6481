import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epmhd import mesh as msh


def test_counts_and_ordering():
    m = msh.crossed_mesh(3)
    assert m.n_vertices == 4 * 4 + 3 * 3
    assert m.n_cells == 4 * 9
    # grid vertices come first, x fastest, then centroids
    assert np.allclose(m.vertices[0], [-0.5, -0.5])
    assert np.allclose(m.vertices[1], [-0.5 + 1 / 3, -0.5])
    assert np.allclose(m.vertices[4], [-0.5, -0.5 + 1 / 3])
    assert np.allclose(m.vertices[16], [-0.5 + 1 / 6, -0.5 + 1 / 6])


@given(st.integers(min_value=1, max_value=9))
@settings(max_examples=20, deadline=None)
def test_geometry_invariants(n):
    m = msh.crossed_mesh(n)
    assert m.n_vertices == (n + 1) ** 2 + n * n
    assert m.n_cells == 4 * n * n
    _, det, inv = msh.cell_geometry(m)
    assert np.all(det > 0)
    # cell areas tile the unit square
    assert abs(det.sum() / 2 - 1.0) < 1e-13
    assert abs(msh.mesh_size(m) - 1 / n) < 1e-13
    jac, _, inv = msh.cell_geometry(m)
    assert np.allclose(np.einsum("cij,cjk->cik", jac, inv), np.eye(2)[None], atol=1e-13)


@given(st.integers(min_value=1, max_value=8))
@settings(max_examples=16, deadline=None)
def test_boundary_facets(n):
    m = msh.crossed_mesh(n)
    assert len(m.boundary_cells) == 4 * n
    walls = {"left": (0, -0.5), "right": (0, 0.5), "bottom": (1, -0.5), "top": (1, 0.5)}
    for cell, edge, side in zip(m.boundary_cells, m.boundary_edges, m.boundary_sides):
        va = m.cells[cell, edge]
        vb = m.cells[cell, (edge + 1) % 3]
        axis, coord = walls[msh.SIDES[side]]
        assert abs(m.vertices[va, axis] - coord) < 1e-14
        assert abs(m.vertices[vb, axis] - coord) < 1e-14
    # every wall carries n facets
    assert np.bincount(m.boundary_sides, minlength=4).tolist() == [n] * 4


def test_dump_load_roundtrip():
    m = msh.crossed_mesh(4)
    m2 = msh.load(msh.dump(m))
    assert m2.n == m.n
    assert np.array_equal(m2.vertices, m.vertices)
    assert np.array_equal(m2.cells, m.cells)
    assert np.array_equal(m2.boundary_cells, m.boundary_cells)
    assert np.array_equal(m2.boundary_sides, m.boundary_sides)


@pytest.mark.parametrize("bad", [0, -3, 2.5, "8"])
def test_invalid_subdivisions_rejected(bad):
    with pytest.raises(ValueError):
        msh.crossed_mesh(bad)
