import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partcomplete.geometry import (
    AABB,
    GeometryError,
    NormTransform,
    TriMesh,
    bounding_box,
    is_edge_manifold,
    merge_meshes,
    normalize_to_unit,
)
from partcomplete.primitives import box_mesh, icosphere

from conftest import random_soup


class TestTriMesh:
    def test_rejects_out_of_range_face(self):
        with pytest.raises(GeometryError):
            TriMesh(np.zeros((3, 3)), [[0, 1, 5]])

    def test_rejects_repeated_index_face(self):
        with pytest.raises(GeometryError):
            TriMesh(np.eye(3), [[0, 1, 1]])

    def test_rejects_nonfinite_vertices(self):
        v = np.eye(3)
        v = v.copy()
        v[0, 0] = np.nan
        with pytest.raises(GeometryError):
            TriMesh(v, [[0, 1, 2]])

    def test_arrays_are_immutable(self, unit_cube):
        with pytest.raises(ValueError):
            unit_cube.vertices[0, 0] = 5.0

    def test_label_length_checked(self):
        with pytest.raises(GeometryError):
            TriMesh(np.eye(3), [[0, 1, 2]], face_labels=[0, 1])


class TestNormalize:
    def test_symmetric_cube(self):
        # corners (0,0,0)-(2,2,2) -> (-1..1) with scale 1, translation (-1,-1,-1)
        mesh = box_mesh((1, 1, 1), (2, 2, 2))
        out, t = normalize_to_unit(mesh)
        assert t.scale == pytest.approx(1.0)
        assert t.translation == pytest.approx([-1.0, -1.0, -1.0])
        box = bounding_box(out)
        assert box.min_corner == pytest.approx([-1, -1, -1])
        assert box.max_corner == pytest.approx([1, 1, 1])

    def test_anisotropic_box(self):
        mesh = box_mesh((2, 1, 1), (4, 2, 2))
        out, _ = normalize_to_unit(mesh)
        box = bounding_box(out)
        assert box.min_corner == pytest.approx([-1, -0.5, -0.5])
        assert box.max_corner == pytest.approx([1, 0.5, 0.5])

    def test_round_trip_identity(self):
        rng = np.random.default_rng(3)
        mesh = random_soup(rng)
        out, t = normalize_to_unit(mesh)
        back = t.inverse().apply(out.vertices)
        assert np.abs(back - mesh.vertices).max() < 1e-9

    def test_zero_extent_rejected(self):
        with pytest.raises(GeometryError):
            normalize_to_unit(TriMesh(np.zeros((3, 3)), [[0, 1, 2]]))

    @given(
        scale=st.floats(1e-3, 1e3),
        tx=st.floats(-100, 100),
        ty=st.floats(-100, 100),
        tz=st.floats(-100, 100),
    )
    @settings(max_examples=50, deadline=None)
    def test_transform_roundtrip_property(self, scale, tx, ty, tz):
        t = NormTransform(scale, (tx, ty, tz))
        p = np.array([[0.3, -4.0, 7.5], [0.0, 0.0, 0.0]])
        back = t.inverse().apply(t.apply(p))
        assert np.abs(back - p).max() < 1e-9 * max(1.0, np.abs(p).max())


class TestMerge:
    def test_two_cubes_counts_and_labels(self):
        a = box_mesh((0, 0, 0), (1, 1, 1))
        b = box_mesh((3, 0, 0), (1, 1, 1))
        m = merge_meshes([a, b])
        assert m.n_vertices == 16
        assert m.n_faces == 24
        assert set(np.unique(m.face_labels)) == {0, 1}

    def test_single_part_identity(self, unit_cube):
        m = merge_meshes([unit_cube])
        assert np.array_equal(m.vertices, unit_cube.vertices)
        assert np.array_equal(m.faces, unit_cube.faces)
        assert set(np.unique(m.face_labels)) == {0}

    def test_face_count_and_area_preserved(self):
        rng = np.random.default_rng(11)
        parts = [random_soup(rng, 20, 30) for _ in range(5)]
        merged = merge_meshes(parts)
        assert merged.n_faces == sum(p.n_faces for p in parts)
        assert abs(merged.area() - sum(p.area() for p in parts)) < 1e-9

    def test_empty_list_rejected(self):
        with pytest.raises(GeometryError):
            merge_meshes([])


class TestBoundingBox:
    def test_cube(self):
        box = bounding_box(box_mesh((0, 0, 0), (2, 2, 2)))
        assert box.min_corner == pytest.approx([-1, -1, -1])
        assert box.max_corner == pytest.approx([1, 1, 1])

    def test_single_triangle(self):
        m = TriMesh([[0, 0, 0], [1, 0, 0], [0, 2, 0]], [[0, 1, 2]])
        box = bounding_box(m)
        assert box.min_corner == pytest.approx([0, 0, 0])
        assert box.max_corner == pytest.approx([1, 2, 0])

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(5)
        mesh = random_soup(rng)
        box = bounding_box(mesh)
        lo = np.array([min(v[k] for v in mesh.vertices) for k in range(3)])
        hi = np.array([max(v[k] for v in mesh.vertices) for k in range(3)])
        assert np.array_equal(box.min_corner, lo)
        assert np.array_equal(box.max_corner, hi)


class TestAABB:
    def test_invalid_rejected(self):
        with pytest.raises(GeometryError):
            AABB((1, 0, 0), (0, 1, 1))

    def test_scaled_about_center(self):
        box = AABB((0, 0, 0), (2, 4, 6)).scaled(1.5)
        assert box.center == pytest.approx([1, 2, 3])
        assert box.extent == pytest.approx([3, 6, 9])


def test_icosphere_is_closed_manifold():
    assert is_edge_manifold(icosphere(2))


def test_box_outward_orientation(unit_cube):
    t = unit_cube.triangles()
    signed = np.einsum(
        "ij,ij->i", t[:, 0], np.cross(t[:, 1], t[:, 2])
    ).sum() / 6.0
    assert signed == pytest.approx(1.0, rel=1e-12)  # cube volume, outward winding
