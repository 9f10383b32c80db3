import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aaipp.mesh import (
    BoundaryTag,
    TriMesh,
    barycentric_refine,
    cavity_mesh,
    structured_unit_square,
    tag_cavity_boundary,
)


def edge_set(mesh):
    e = set()
    for a, b, c in mesh.triangles.tolist():
        for p, q in ((a, b), (b, c), (c, a)):
            e.add((min(p, q), max(p, q)))
    return e


def assert_valid(mesh):
    assert np.all(mesh.signed_areas() > 0)
    assert abs(np.abs(mesh.signed_areas()).sum() - 1.0) <= 1e-15 * max(1, mesh.n_triangles)
    E = len(edge_set(mesh))
    assert mesh.n_vertices - E + mesh.n_triangles == 1
    # interior edges shared by two triangles, boundary edges by one
    count = {}
    for a, b, c in mesh.triangles.tolist():
        for p, q in ((a, b), (b, c), (c, a)):
            k = (min(p, q), max(p, q))
            count[k] = count.get(k, 0) + 1
    boundary = {tuple(sorted(e)) for e in mesh.boundary_edges.tolist()}
    for k, c in count.items():
        assert c == (1 if k in boundary else 2)
    pts = mesh.points[mesh.boundary_edges]
    on_frame = np.isclose(pts, 0.0) | np.isclose(pts, 1.0)
    # both endpoints share one frame coordinate
    assert np.all((on_frame[:, 0, 0] & on_frame[:, 1, 0] & np.isclose(pts[:, 0, 0], pts[:, 1, 0]))
                  | (on_frame[:, 0, 1] & on_frame[:, 1, 1] & np.isclose(pts[:, 0, 1], pts[:, 1, 1])))


class TestStructured:
    def test_n1(self):
        m = structured_unit_square(1)
        assert (m.n_vertices, m.n_triangles, len(m.boundary_edges)) == (4, 2, 4)

    def test_n2_area(self):
        m = structured_unit_square(2)
        assert (m.n_vertices, m.n_triangles) == (9, 8)
        assert abs(m.signed_areas().sum() - 1.0) <= 1e-15

    def test_n4_euler(self):
        m = structured_unit_square(4)
        assert (m.n_vertices, len(edge_set(m)), m.n_triangles) == (25, 56, 32)
        assert 25 - 56 + 32 == 1

    def test_grid_spacing(self):
        m = structured_unit_square(8)
        np.testing.assert_allclose(np.diff(np.unique(m.points[:, 0])), 1 / 8, rtol=1e-14)
        assert m.mesh_width() == pytest.approx(np.sqrt(2) / 8, rel=1e-14)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            structured_unit_square(0)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_invariants(self, n):
        assert_valid(structured_unit_square(n))


class TestBarycentric:
    def test_n1_counts(self):
        m = barycentric_refine(structured_unit_square(1))
        assert (m.n_vertices, m.n_triangles) == (6, 6)

    def test_n2(self):
        m = barycentric_refine(structured_unit_square(2))
        assert (m.n_vertices, m.n_triangles) == (17, 24)
        assert np.all(m.signed_areas() > 0)

    def test_boundary_unchanged(self):
        base = structured_unit_square(3)
        m = barycentric_refine(base)
        np.testing.assert_array_equal(m.boundary_edges, base.boundary_edges)
        np.testing.assert_array_equal(m.points[: base.n_vertices], base.points)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2))
    def test_invariants_after_refinements(self, n, times):
        m = structured_unit_square(n)
        for _ in range(times):
            V, F = m.n_vertices, m.n_triangles
            m = barycentric_refine(m)
            assert m.n_vertices == V + F and m.n_triangles == 3 * F
        assert_valid(m)


class TestTags:
    @pytest.mark.parametrize("n,lid,wall", [(1, 1, 3), (2, 2, 6), (5, 5, 15)])
    def test_counts(self, n, lid, wall):
        m = tag_cavity_boundary(structured_unit_square(n))
        assert np.sum(m.boundary_tags == BoundaryTag.LID) == lid
        assert np.sum(m.boundary_tags == BoundaryTag.WALL) == wall

    def test_lid_edges_on_top(self):
        m = cavity_mesh(4)
        lid = m.boundary_edges[m.boundary_tags == BoundaryTag.LID]
        assert np.all(m.points[lid][..., 1] == 1.0)

    def test_corners_touch_both(self):
        m = tag_cavity_boundary(structured_unit_square(2))
        for corner in ([0.0, 1.0], [1.0, 1.0]):
            v = int(np.flatnonzero(np.all(m.points == corner, axis=1))[0])
            tags = {int(t) for e, t in zip(m.boundary_edges.tolist(), m.boundary_tags) if v in e}
            assert tags == {BoundaryTag.LID, BoundaryTag.WALL}

    def test_off_frame_rejected(self):
        base = structured_unit_square(1)
        pts = base.points.copy()
        pts[3] = [1.2, 1.1]
        bad = TriMesh(pts, base.triangles, base.boundary_edges)
        with pytest.raises(ValueError):
            tag_cavity_boundary(bad)
