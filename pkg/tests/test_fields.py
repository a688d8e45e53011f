import numpy as np
import pytest

from partcomplete.fields import (
    FieldError,
    OccGrid,
    ScalarGrid,
    compute_udf,
    load_grid,
    local_marching_cubes,
    marching_cubes,
    occupancy_grid_of_mesh,
    save_grid,
    signed_from_udf,
    voxelize_points,
    watertight_proxy,
)
from partcomplete.geometry import (
    AABB,
    TriMesh,
    bounding_box,
    boundary_edge_count,
    connected_face_components,
    is_edge_manifold,
)
from partcomplete.primitives import box_mesh, icosphere
from partcomplete.sampling import sample_surface


def analytic_sphere_grid(n, r, domain=2.0):
    x = np.linspace(-domain / 2, domain / 2, n)
    g = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    vals = np.linalg.norm(g, axis=-1) - r
    cell = domain / n
    box = AABB(
        (-domain / 2 - cell / 2,) * 3, (domain / 2 + cell / 2,) * 3
    )  # centers land exactly on the linspace nodes
    return ScalarGrid((n, n, n), box, vals)


class TestComputeUDF:
    def test_cells_above_triangle_have_plane_distance(self):
        tri = TriMesh([[-1, -1, 0], [1, -1, 0], [0, 1, 0]], [[0, 1, 2]])
        domain = AABB((-2, -2, -2), (2, 2, 2))
        grid = compute_udf(tri, 4, domain)
        # centers (+-0.5, -0.5, +-0.5) project inside the triangle -> dist 0.5
        centers = grid.cell_centers()
        d = grid.values.ravel()
        sel = (
            (np.abs(centers[:, 0]) == 0.5)
            & (centers[:, 1] == -0.5)
            & (np.abs(centers[:, 2]) == 0.5)
        )
        assert sel.sum() == 4
        assert np.allclose(d[sel], 0.5, atol=1e-12)

    def test_cell_center_exactly_on_surface(self):
        tri = TriMesh([[-1, -1, 0.5], [1, -1, 0.5], [0, 1, 0.5]], [[0, 1, 2]])
        domain = AABB((-2, -2, -2), (2, 2, 2))
        grid = compute_udf(tri, 4, domain)
        assert grid.values.min() == 0.0

    def test_icosphere_center_distance(self):
        sph = icosphere(4, radius=0.8)
        domain = AABB((-1, -1, -1), (1, 1, 1))
        grid = compute_udf(sph, 5, domain)
        # center cell of a 5^3 grid sits exactly at the origin
        center_val = grid.values[2, 2, 2]
        assert abs(center_val - 0.8) <= 0.01

    def test_min_udf_below_half_cell_diagonal(self):
        sph = icosphere(2, radius=0.6)
        grid = compute_udf(sph, 32)
        half_diag = 0.5 * float(np.linalg.norm(grid.cell_size))
        assert grid.values.min() <= half_diag

    def test_rejects_domain_not_containing_mesh(self):
        sph = icosphere(1, radius=0.9)
        with pytest.raises(FieldError):
            compute_udf(sph, 8, AABB((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5)))

    def test_udf_nonnegative(self):
        grid = compute_udf(icosphere(1, 0.5), 16)
        assert grid.values.min() >= 0.0


class TestMarchingCubes:
    def test_sphere_area_within_2_percent(self):
        grid = analytic_sphere_grid(128, 0.5)
        mesh = marching_cubes(grid, 0.0)
        assert is_edge_manifold(mesh)
        assert abs(mesh.area() / (4 * np.pi * 0.25) - 1.0) < 0.02

    def test_constant_grid_rejected(self):
        grid = ScalarGrid((4, 4, 4), AABB((0, 0, 0), (1, 1, 1)), np.ones((4, 4, 4)))
        with pytest.raises(FieldError):
            marching_cubes(grid, 1.0)

    def test_iso_outside_range_rejected(self):
        grid = analytic_sphere_grid(16, 0.5)
        with pytest.raises(FieldError):
            marching_cubes(grid, 1e9)

    def test_udf_offset_gives_two_nested_closed_shells(self):
        sph = icosphere(3, radius=0.6)
        grid = compute_udf(sph, 64)
        tau = 1.5 * float(grid.cell_size.max())
        mesh = marching_cubes(grid, tau)
        assert is_edge_manifold(mesh)  # every edge borders exactly 2 faces
        labels = connected_face_components(mesh)
        assert labels.max() + 1 == 2  # outer and inner offset shells


class TestSignedFromUDF:
    def test_single_outer_shell(self):
        sph = icosphere(3, radius=0.6)
        grid = compute_udf(sph, 64)
        tau = 1.5 * float(grid.cell_size.max())
        signed = signed_from_udf(grid, tau)
        mesh = marching_cubes(signed, 0.0)
        assert is_edge_manifold(mesh)
        labels = connected_face_components(mesh)
        assert labels.max() + 1 == 1  # inner shell suppressed

    def test_rejects_signed_input(self):
        grid = analytic_sphere_grid(8, 0.5)
        with pytest.raises(FieldError):
            signed_from_udf(grid, 0.1)


class TestWatertightProxy:
    def test_open_surface_becomes_closed(self):
        sph = icosphere(3, radius=0.6)
        # cut away the top: an open bowl
        keep = sph.face_centroids()[:, 2] < 0.3
        bowl = sph.submesh(keep)
        assert boundary_edge_count(bowl) > 0
        proxy = watertight_proxy(bowl, resolution=64)
        assert is_edge_manifold(proxy)

    def test_proxy_close_to_input_surface(self):
        sph = icosphere(3, radius=0.6)
        proxy = watertight_proxy(sph, resolution=96)
        pts = sample_surface(proxy, 2000, seed=1)
        r = np.linalg.norm(pts.positions, axis=1)
        cell = 0.6 * 2 * 1.16 / 96
        assert np.abs(r - 0.6).max() < 3.5 * cell  # tau offset + grid error


class TestLocalMarchingCubes:
    def test_sphere_indicator_logit(self):
        def occ(p):
            return 0.5 - np.linalg.norm(p, axis=1)  # inside positive

        box = AABB((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))
        mesh = local_marching_cubes(occ, box, scale=1.3, resolution=64)
        assert is_edge_manifold(mesh)
        assert abs(mesh.area() / (4 * np.pi * 0.25) - 1.0) < 0.03

    def test_vertices_in_whole_coordinates(self):
        def occ(p):
            return 0.2 - np.linalg.norm(p - np.array([2.0, 1.0, -1.0]), axis=1)

        box = AABB((1.8, 0.8, -1.2), (2.2, 1.2, -0.8))
        mesh = local_marching_cubes(occ, box, resolution=48)
        c = mesh.vertices.mean(axis=0)
        assert c == pytest.approx([2.0, 1.0, -1.0], abs=0.05)

    def test_scale_one_clipped_warns(self):
        def occ(p):
            return 0.5 - np.linalg.norm(p, axis=1)  # sphere poking past the box

        box = AABB((-0.4, -0.4, -0.4), (0.4, 0.4, 0.4))
        with pytest.warns(UserWarning, match="clipped"):
            mesh = local_marching_cubes(occ, box, scale=1.0, resolution=32)
        assert boundary_edge_count(mesh) > 0

    def test_scale_one_exact_fill_stays_closed(self):
        def occ(p):
            return 0.5 - np.abs(p).max(axis=1)  # cube exactly filling the box

        box = AABB((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))
        mesh = local_marching_cubes(occ, box, scale=1.0, resolution=32)
        assert is_edge_manifold(mesh)

    def test_no_crossing_rejected(self):
        box = AABB((0, 0, 0), (1, 1, 1))
        with pytest.raises(FieldError, match="crossing"):
            local_marching_cubes(lambda p: -np.ones(len(p)), box, resolution=16)

    def test_default_scale_is_1_3(self):
        import inspect

        sig = inspect.signature(local_marching_cubes)
        assert sig.parameters["scale"].default == 1.3

    def test_local_vs_global_extraction_agreement(self):
        def occ(p):
            return 0.45 - np.linalg.norm(p, axis=1)

        gxs = np.linspace(-1, 1, 64)
        g = np.stack(np.meshgrid(gxs, gxs, gxs, indexing="ij"), axis=-1)
        vals = -(0.45 - np.linalg.norm(g, axis=-1))
        from partcomplete.kernels import marching_cubes_core

        verts_idx, faces = marching_cubes_core(vals, 0.0)
        verts = verts_idx * (2.0 / 63) - 1.0
        global_mesh = TriMesh(verts, faces)
        box = bounding_box(global_mesh)
        local = local_marching_cubes(occ, box, scale=1.3, resolution=64)
        from partcomplete.evalbench import chamfer_l1

        a = sample_surface(local, 5000, 0)
        b = sample_surface(global_mesh, 5000, 1)
        cell = 2.0 / 63
        assert chamfer_l1(a, b) <= 2 * cell


class TestVoxelize:
    def test_single_center_point(self):
        domain = AABB((0, 0, 0), (1, 1, 1))
        grid = voxelize_points(np.array([[0.5, 0.5, 0.5]]), 64, domain)
        assert grid.count() == 1

    def test_identical_clouds_full_iou(self):
        from partcomplete.evalbench import iou

        rng = np.random.default_rng(0)
        pts = rng.uniform(0, 1, size=(500, 3))
        domain = AABB((0, 0, 0), (1, 1, 1))
        a = voxelize_points(pts, 32, domain)
        b = voxelize_points(pts, 32, domain)
        assert iou(a, b) == 1.0

    def test_matches_brute_binning(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(-1, 1, size=(10_000, 3))
        domain = AABB((-1, -1, -1), (1, 1, 1))
        grid = voxelize_points(pts, 16, domain)
        brute = np.zeros((16, 16, 16), dtype=bool)
        for p in pts:
            idx = np.minimum(((p + 1) / (2 / 16)).astype(int), 15)
            brute[tuple(idx)] = True
        assert np.array_equal(grid.values, brute)

    def test_max_boundary_point_in_last_cell(self):
        domain = AABB((0, 0, 0), (1, 1, 1))
        grid = voxelize_points(np.array([[1.0, 1.0, 1.0]]), 8, domain)
        assert grid.values[7, 7, 7]

    def test_outside_points_clamped_with_warning(self):
        domain = AABB((0, 0, 0), (1, 1, 1))
        with pytest.warns(UserWarning, match="outside"):
            grid = voxelize_points(np.array([[2.0, 0.5, 0.5]]), 8, domain)
        assert grid.values[7, 4, 4]

    def test_monotone_under_point_addition(self):
        rng = np.random.default_rng(2)
        pts = rng.uniform(0, 1, size=(200, 3))
        domain = AABB((0, 0, 0), (1, 1, 1))
        a = voxelize_points(pts[:100], 16, domain)
        b = voxelize_points(pts, 16, domain)
        assert not (a.values & ~b.values).any()


class TestGridIO:
    def test_scalar_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        grid = ScalarGrid((4, 5, 6), AABB((0, 0, 0), (1, 2, 3)), rng.normal(size=(4, 5, 6)))
        p = tmp_path / "g.bin"
        save_grid(p, grid)
        back = load_grid(p)
        assert isinstance(back, ScalarGrid)
        assert np.array_equal(back.values, grid.values)
        assert back.resolution == grid.resolution
        assert np.array_equal(back.domain.min_corner, grid.domain.min_corner)

    def test_occ_roundtrip(self, tmp_path):
        rng = np.random.default_rng(4)
        grid = OccGrid((8, 8, 8), AABB((0, 0, 0), (1, 1, 1)), rng.random((8, 8, 8)) > 0.5)
        p = tmp_path / "o.bin"
        save_grid(p, grid)
        back = load_grid(p)
        assert isinstance(back, OccGrid)
        assert np.array_equal(back.values, grid.values)


def test_occupancy_grid_of_mesh_matches_analytic():
    sph = icosphere(3, radius=0.7)
    domain = AABB((-1, -1, -1), (1, 1, 1))
    grid = occupancy_grid_of_mesh(sph, 32, domain)
    g = ScalarGrid((32, 32, 32), domain, np.zeros((32, 32, 32)))
    centers = g.cell_centers().reshape(32, 32, 32, 3)
    r = np.linalg.norm(centers, axis=-1)
    clear = np.abs(r - 0.7) > 0.03
    assert np.array_equal(grid.values[clear], (r < 0.7)[clear])
