"""Backend parity and kernel-level oracles.

The compiled and pure NumPy backends must agree bit-for-bit on distances,
face ids, parities, FPS picks and raster buffers."""

import numpy as np
import pytest

from partcomplete import kernels
from partcomplete.kernels import MeshQuery, fps_core, get_backend, marching_cubes_core
from partcomplete.kernels.fallback import closest_on_triangles
from partcomplete.primitives import box_mesh, icosphere

from conftest import BACKENDS, random_soup

needs_native = pytest.mark.skipif(
    kernels.BACKEND != "native", reason="native extension not built"
)


def brute_closest(mesh, queries):
    t = mesh.triangles()
    d = np.empty(len(queries))
    f = np.empty(len(queries), dtype=np.int64)
    for i, q in enumerate(queries):
        cp = closest_on_triangles(
            np.tile(q, (mesh.n_faces, 1)), t[:, 0], t[:, 1], t[:, 2]
        )
        d2 = ((cp - q) ** 2).sum(1)
        j = int(np.lexsort((np.arange(mesh.n_faces), d2))[0])
        d[i] = np.sqrt(d2[j])
        f[i] = j
    return d, f


class TestClosestPoint:
    @pytest.mark.parametrize("be", BACKENDS)
    def test_matches_brute_force(self, be):
        rng = np.random.default_rng(42)
        mesh = random_soup(rng, 50, 90)
        q = rng.normal(size=(300, 3)) * 1.4
        d, f = MeshQuery(mesh.vertices, mesh.faces, backend=be).closest(q)
        db, fb = brute_closest(mesh, q)
        assert np.array_equal(d, db)
        assert np.array_equal(f, fb)

    @needs_native
    def test_backends_bit_identical(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            mesh = random_soup(rng, 40, 70)
            q = rng.normal(size=(200, 3))
            dn, fn = MeshQuery(mesh.vertices, mesh.faces, backend="native").closest(q)
            dp, fp = MeshQuery(mesh.vertices, mesh.faces, backend="python").closest(q)
            assert np.array_equal(dn, dp)
            assert np.array_equal(fn, fp)

    def test_on_surface_distance_zero(self, backend):
        mesh = box_mesh((0, 0, 0), (2, 2, 2))
        centroids = mesh.face_centroids()
        d, _ = MeshQuery(mesh.vertices, mesh.faces, backend=backend).closest(centroids)
        assert d.max() < 1e-12

    def test_degenerate_faces_handled(self, backend):
        # collinear face (distinct indices) must not produce NaN
        v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], dtype=float)
        f = np.array([[0, 1, 2], [0, 1, 3]])
        d, _ = MeshQuery(v, f, backend=backend).closest(np.array([[1.0, -1.0, 0.0]]))
        assert np.isfinite(d).all()
        assert d[0] == pytest.approx(1.0)


class TestInside:
    @pytest.mark.parametrize("be", BACKENDS)
    def test_box_ground_truth(self, be):
        mesh = box_mesh((0.5, 0.5, 0.5), (1, 1, 1))
        rng = np.random.default_rng(3)
        q = rng.uniform(-0.5, 1.5, size=(4000, 3))
        inside = MeshQuery(mesh.vertices, mesh.faces, backend=be).inside(q)
        gt = ((q > 0) & (q < 1)).all(axis=1)
        assert np.array_equal(inside, gt)

    @pytest.mark.parametrize("be", BACKENDS)
    def test_sphere_ground_truth(self, be):
        mesh = icosphere(3, radius=0.7)
        rng = np.random.default_rng(4)
        q = rng.uniform(-1, 1, size=(3000, 3))
        inside = MeshQuery(mesh.vertices, mesh.faces, backend=be).inside(q)
        r = np.linalg.norm(q, axis=1)
        # exclude the thin shell where the icosphere differs from the sphere
        clear = np.abs(r - 0.7) > 0.02
        assert np.array_equal(inside[clear], (r < 0.7)[clear])

    @needs_native
    def test_backends_agree(self):
        mesh = icosphere(2, radius=0.6)
        rng = np.random.default_rng(5)
        q = rng.uniform(-1, 1, size=(2000, 3))
        a = MeshQuery(mesh.vertices, mesh.faces, backend="native").inside(q)
        b = MeshQuery(mesh.vertices, mesh.faces, backend="python").inside(q)
        assert np.array_equal(a, b)


def sphere_grid(n, r):
    x = np.linspace(-1, 1, n)
    g = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    return np.linalg.norm(g, axis=-1) - r


class TestMarchingCubesCore:
    @pytest.mark.parametrize("be", BACKENDS)
    def test_sphere_topology_and_area(self, be):
        g = sphere_grid(64, 0.55)
        verts, faces = marching_cubes_core(g, 0.0, backend=be)
        edges = np.sort(
            np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1
        )
        _, counts = np.unique(edges, axis=0, return_counts=True)
        assert set(counts) == {2}  # closed edge-manifold surface
        cell = 2.0 / 63
        tri = verts[faces] * cell
        area = 0.5 * np.linalg.norm(
            np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1
        ).sum()
        assert abs(area / (4 * np.pi * 0.55**2) - 1.0) < 0.01

    @needs_native
    def test_backends_identical_geometry(self):
        g = sphere_grid(40, 0.5)
        vn, fn = marching_cubes_core(g, 0.0, backend="native")
        vp, fp = marching_cubes_core(g, 0.0, backend="python")

        def canon(v, f):
            key = np.lexsort((v[:, 2], v[:, 1], v[:, 0]))
            remap = np.empty(len(v), dtype=np.int64)
            remap[key] = np.arange(len(v))
            return v[key], np.array(sorted(map(tuple, remap[f])))

        a, b = canon(vn, fn), canon(vp, fp)
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])

    @pytest.mark.parametrize("be", BACKENDS)
    def test_outward_orientation(self, be):
        g = sphere_grid(40, 0.5)
        verts, faces = marching_cubes_core(g, 0.0, backend=be)
        w = verts * (2.0 / 39) - 1.0
        vol = np.einsum("ij,ij->i", w[faces[:, 0]], np.cross(w[faces[:, 1]], w[faces[:, 2]])).sum() / 6
        assert vol > 0


class TestFPS:
    @pytest.mark.parametrize("be", BACKENDS)
    def test_matches_brute_greedy(self, be):
        rng = np.random.default_rng(9)
        p = rng.normal(size=(200, 3))
        got = fps_core(p, 20, 5, backend=be)
        # O(N*m) brute-force greedy oracle
        sel = [5]
        d = ((p - p[5]) ** 2).sum(1)
        d[5] = -1
        for _ in range(19):
            i = int(np.argmax(d))
            sel.append(i)
            d = np.minimum(d, ((p - p[i]) ** 2).sum(1))
            d[i] = -1
        assert np.array_equal(got, sel)

    @pytest.mark.parametrize("be", BACKENDS)
    def test_m_equals_n_selects_all(self, be):
        rng = np.random.default_rng(10)
        p = rng.normal(size=(40, 3))
        got = fps_core(p, 40, 0, backend=be)
        assert sorted(got) == list(range(40))


class TestRaster:
    @needs_native
    def test_backends_identical_buffers(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            xy = rng.uniform(-10, 80, size=(60, 3, 2))
            depth = rng.uniform(0, 1, size=(60, 3))
            a = get_backend("native").rasterize_ids(xy, depth, 72, 72)
            b = get_backend("python").rasterize_ids(xy, depth, 72, 72)
            assert np.array_equal(a, b)
            am = get_backend("native").rasterize_mask(xy, 72, 72)
            bm = get_backend("python").rasterize_mask(xy, 72, 72)
            assert np.array_equal(am, bm)

    @pytest.mark.parametrize("be", BACKENDS)
    def test_nearer_face_wins(self, be):
        # two stacked triangles covering the same pixels; lower depth wins
        xy = np.array([[[2, 2], [60, 2], [2, 60]], [[2, 2], [60, 2], [2, 60]]], dtype=float)
        depth = np.array([[0.8, 0.8, 0.8], [0.2, 0.2, 0.2]])
        buf = get_backend(be).rasterize_ids(xy, depth, 64, 64)
        ids = np.unique(buf)
        assert set(ids.tolist()) == {-1, 1}
