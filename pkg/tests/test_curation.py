import numpy as np
import pytest

from partcomplete.curation import (
    BinaryImage,
    assign_part_masks,
    component_stats,
    count_components,
    curate_corpus,
    filter_connected_components,
    filter_mesh_count,
    filter_volume_dominance,
    make_whole_part_pairs,
    merge_floaters,
    render_silhouette,
    visibility_cull,
)
from partcomplete.curation.rules import RULE_COMPONENTS, RULE_DOMINANCE, RULE_MESH_COUNT
from partcomplete.geometry import AABB, TriMesh, bounding_box, merge_meshes
from partcomplete.primitives import box_mesh, icosphere
from partcomplete.sampling import sample_surface


class TestMeshCount:
    @pytest.mark.parametrize(
        "n,expect_pass",
        [(1, False), (2, True), (15, True), (16, False)],
    )
    def test_boundaries(self, n, expect_pass):
        d = filter_mesh_count("obj", n)
        assert d.verdict is expect_pass
        if not expect_pass:
            assert d.failed_rule == RULE_MESH_COUNT


class TestSilhouette:
    def test_cube_frontal_fill_ratio(self):
        img = render_silhouette(box_mesh((0, 0, 0), (1, 1, 1)), "frontal", res=256)
        fill = img.fill_count() / (256 * 256)
        assert abs(fill - 0.81) < 0.01

    def test_two_disjoint_cubes_two_components(self):
        m = merge_meshes(
            [box_mesh((0, 0, 0), (1, 1, 1)), box_mesh((0, 3, 0), (1, 1, 1))]
        )
        img = render_silhouette(m, "frontal", res=128)
        assert count_components(img) == 2

    def test_thin_rod_frontal_has_a_pixel(self):
        rod = box_mesh((0, 0, 0), (1e-9, 1e-9, 2.0))
        img = render_silhouette(rod, "frontal", res=64)
        assert img.fill_count() >= 1

    def test_side_view_projects_along_x(self):
        # slab wide in x, thin in y: frontal (x,y) is wide, side (y,z) is tall
        slab = box_mesh((0, 0, 0), (4.0, 0.2, 2.0))
        frontal = render_silhouette(slab, "frontal", res=128)
        side = render_silhouette(slab, "side", res=128)

        def spans(img):
            rows, cols = np.nonzero(img.pixels)
            return np.ptp(rows), np.ptp(cols)

        f_rows, f_cols = spans(frontal)
        s_rows, s_cols = spans(side)
        assert f_cols > 4 * f_rows   # x spread across columns
        assert s_rows > 4 * s_cols   # z spread across rows

    def test_thin_rod_is_near_point(self):
        rod = box_mesh((0, 0, 0), (1e-9, 1e-9, 2.0))
        img = render_silhouette(rod, "frontal", res=64)
        assert 1 <= img.fill_count() <= 4

    def test_zero_extent_projection_rejected(self):
        point = box_mesh((0, 0, 0), (0.0, 0.0, 0.0))
        from partcomplete.geometry import GeometryError

        with pytest.raises(GeometryError, match="zero-extent"):
            render_silhouette(point, "frontal", res=64)


class TestComponents:
    def test_all_zero_image(self):
        assert count_components(BinaryImage(np.zeros((8, 8), dtype=bool))) == 0

    def test_diagonal_pixels_are_one_component(self):
        px = np.zeros((8, 8), dtype=bool)
        px[2, 2] = px[3, 3] = True
        assert count_components(BinaryImage(px)) == 1

    def test_matches_flood_fill_oracle(self):
        rng = np.random.default_rng(6)
        px = rng.random((40, 40)) > 0.7
        got = count_components(BinaryImage(px))

        # independent 8-connected flood fill
        seen = np.zeros_like(px)
        n = 0
        for i in range(40):
            for j in range(40):
                if px[i, j] and not seen[i, j]:
                    n += 1
                    stack = [(i, j)]
                    seen[i, j] = True
                    while stack:
                        a, b = stack.pop()
                        for da in (-1, 0, 1):
                            for db in (-1, 0, 1):
                                x, y = a + da, b + db
                                if 0 <= x < 40 and 0 <= y < 40 and px[x, y] and not seen[x, y]:
                                    seen[x, y] = True
                                    stack.append((x, y))
        assert got == n

    def test_percentile_filter_flags_outlier(self):
        stats = [component_stats(f"o{i}", [1, 1, 1, 1]) for i in range(9)]
        stats.append(component_stats("bad", [10, 10, 10, 10]))
        decisions = filter_connected_components(stats)
        verdicts = {d.object_id: d.verdict for d in decisions}
        assert verdicts["bad"] is False
        assert all(v for k, v in verdicts.items() if k != "bad")
        assert [d for d in decisions if not d.verdict][0].failed_rule == RULE_COMPONENTS

    def test_identical_corpus_all_pass(self):
        stats = [component_stats(f"o{i}", [3, 3, 2, 4]) for i in range(6)]
        decisions = filter_connected_components(stats)
        assert all(d.verdict for d in decisions)

    def test_single_object_passes_with_warning(self):
        with pytest.warns(UserWarning):
            decisions = filter_connected_components([component_stats("solo", [2, 2])])
        assert decisions[0].verdict

    def test_order_independence(self):
        rng = np.random.default_rng(7)
        stats = [
            component_stats(f"o{i}", rng.integers(1, 8, size=6).tolist())
            for i in range(12)
        ]
        fwd = {d.object_id: d.verdict for d in filter_connected_components(stats)}
        rev = {d.object_id: d.verdict for d in filter_connected_components(stats[::-1])}
        assert fwd == rev


def _sils(mesh, frame, res=128):
    return {
        v: render_silhouette(mesh, v, res=res, frame_mesh=frame) for v in ("frontal", "side")
    }


class TestDominance:
    def test_big_cube_dominates(self):
        big = box_mesh((0, 0, 0), (2, 2, 2))
        tiny = box_mesh((1.2, 0, 0), (0.2, 0.2, 0.2))
        merged = merge_meshes([big, tiny])
        d = filter_volume_dominance(
            "obj",
            _sils(merged, merged),
            [_sils(big, merged), _sils(tiny, merged)],
            [bounding_box(big), bounding_box(tiny)],
            bounding_box(merged),
        )
        assert d.verdict is False
        assert d.failed_rule == RULE_DOMINANCE
        assert 0 in d.diagnostics["dominant_parts"]

    def test_table_passes(self):
        top = box_mesh((0, 0, 0.5), (1.6, 1.0, 0.1))
        legs = [
            box_mesh((sx * 0.7, sy * 0.4, 0.0), (0.1, 0.1, 0.9))
            for sx in (-1, 1)
            for sy in (-1, 1)
        ]
        parts = [top] + legs
        merged = merge_meshes(parts)
        d = filter_volume_dominance(
            "table",
            _sils(merged, merged),
            [_sils(p, merged) for p in parts],
            [bounding_box(p) for p in parts],
            bounding_box(merged),
        )
        assert d.verdict is True

    def test_floaters_flagged(self):
        body = box_mesh((0, 0, 0), (1, 1, 1))
        crumb = box_mesh((2, 2, 2), (0.01, 0.01, 0.01))
        merged = merge_meshes([body, crumb])
        d = filter_volume_dominance(
            "obj",
            _sils(merged, merged),
            [_sils(body, merged), _sils(crumb, merged)],
            [bounding_box(body), bounding_box(crumb)],
            bounding_box(merged),
        )
        assert 1 in d.diagnostics["floaters"]

    def test_threshold_default_is_090(self):
        import inspect

        from partcomplete.curation.rules import filter_volume_dominance as f

        assert inspect.signature(f).parameters["threshold"].default == 0.90


class TestVisibility:
    def test_single_cube_keeps_all_faces(self, unit_cube):
        culled = visibility_cull(unit_cube, n_views=42, res=128)
        assert culled.n_faces == 12

    def test_nested_cube_inner_removed(self):
        outer = box_mesh((0, 0, 0), (2, 2, 2))
        inner = box_mesh((0, 0, 0), (0.5, 0.5, 0.5))
        merged = merge_meshes([outer, inner])
        culled = visibility_cull(merged, n_views=42, res=128)
        assert set(np.unique(culled.face_labels)) == {0}
        assert culled.n_faces == 12

    def test_table_contact_faces_removed(self):
        top = box_mesh((0, 0, 0.55), (1.6, 1.0, 0.1))
        legs = [
            box_mesh((sx * 0.6, sy * 0.35, 0.2), (0.12, 0.12, 0.7))
            for sx in (-1, 1)
            for sy in (-1, 1)
        ]
        merged = merge_meshes([top] + legs)
        culled = visibility_cull(merged, n_views=162, res=256)
        assert 0 < culled.n_faces < merged.n_faces

    def test_idempotent(self):
        outer = box_mesh((0, 0, 0), (2, 2, 2))
        inner = icosphere(1, 0.4)
        merged = merge_meshes([outer, inner])
        once = visibility_cull(merged, n_views=42, res=128)
        twice = visibility_cull(once, n_views=42, res=128)
        assert once.n_faces == twice.n_faces
        assert np.array_equal(once.faces, twice.faces)


class TestAssignMasks:
    def test_identity_whole(self):
        part = icosphere(2, 0.5)
        labels = assign_part_masks(part, [part])
        assert set(np.unique(labels)) == {0}

    def test_two_separated_cubes_zero_mislabels(self):
        a = box_mesh((0, 0, 0), (1, 1, 1))
        b = box_mesh((5, 0, 0), (1, 1, 1))
        whole = merge_meshes([a, b])
        labels = assign_part_masks(whole, [a, b])
        assert np.array_equal(labels, whole.face_labels)

    def test_tie_breaks_to_lower_index(self):
        # whole face equidistant between two identical parts
        left = box_mesh((-1.0, 0, 0), (1, 1, 1))
        right = box_mesh((1.0, 0, 0), (1, 1, 1))
        mid = TriMesh(
            [[0, -0.1, -0.1], [0, 0.1, -0.1], [0, 0, 0.1]], [[0, 1, 2]]
        )
        labels = assign_part_masks(mid, [left, right])
        assert labels[0] == 0


class TestMergeFloaters:
    def test_floater_merged_into_nearest(self):
        a = box_mesh((0, 0, 0), (1, 1, 1))
        b = box_mesh((5, 0, 0), (1, 1, 1))
        crumb = box_mesh((4.4, 0, 0), (0.05, 0.05, 0.05))
        merged = merge_floaters([a, b, crumb], [2])
        assert len(merged) == 2
        assert merged[1].n_faces == 24  # crumb joined the near cube


class TestPairs:
    def test_two_interpenetrating_cubes(self):
        a = box_mesh((0, 0, 0), (1.2, 1.0, 1.0))
        b = box_mesh((0.8, 0, 0), (1.2, 1.0, 1.0))
        obj = make_whole_part_pairs(
            "cubes", [a, b], udf_resolution=64, n_views=42, parts_watertight=True
        )
        assert obj.n_parts == 2
        assert set(np.unique(obj.whole.face_labels)) == {0, 1}
        # whole proxy approximates the boolean union: proxy samples must lie
        # near the union surface and never deep inside either cube
        pts = sample_surface(obj.whole, 3000, seed=0).positions
        from partcomplete.kernels import MeshQuery

        na = obj.norm.apply(a.vertices)
        nb = obj.norm.apply(b.vertices)
        qa = MeshQuery(na, a.faces)
        qb = MeshQuery(nb, b.faces)
        inside_a = qa.inside(pts)
        inside_b = qb.inside(pts)
        da = qa.distance(pts)
        db = qb.distance(pts)
        cell = 2 * 1.16 / 64
        deep = (inside_a & (da > 3 * cell)) | (inside_b & (db > 3 * cell))
        assert deep.mean() < 0.01
        near_union = np.minimum(da, db) < 3 * cell
        assert near_union.mean() > 0.99

    def test_single_part_whole_matches_part(self):
        sph = icosphere(2, 0.6)
        obj = make_whole_part_pairs(
            "solo", [sph], udf_resolution=64, n_views=42, parts_watertight=True
        )
        from partcomplete.evalbench import chamfer_l1

        a = sample_surface(obj.whole, 4000, seed=1)
        b = sample_surface(obj.parts[0], 4000, seed=2)
        cell = 2 * 1.16 / 64
        assert chamfer_l1(a, b) <= 2 * cell

    def test_table_masks_partition_faces(self):
        top = box_mesh((0, 0, 0.55), (1.6, 1.0, 0.14))
        legs = [
            box_mesh((sx * 0.6, sy * 0.35, 0.1), (0.12, 0.12, 0.9))
            for sx in (-1, 1)
            for sy in (-1, 1)
        ]
        obj = make_whole_part_pairs(
            "table", [top] + legs, udf_resolution=72, n_views=42, parts_watertight=True
        )
        assert obj.n_parts == 5
        labels = obj.whole.face_labels
        assert labels.min() == 0 and labels.max() == 4
        assert sum(obj.mask_faces(i).sum() for i in range(5)) == obj.whole.n_faces


class TestCorpusOrchestration:
    def test_six_object_fixture_two_failures(self):
        rng = np.random.default_rng(0)

        def normal_obj(k):
            return [
                box_mesh((0, 0, 0.5), (1.4, 1.0, 0.1 + 0.01 * k)),
                box_mesh((-0.5, -0.3, 0), (0.1, 0.1, 0.9)),
                box_mesh((0.5, 0.3, 0), (0.1, 0.1, 0.9)),
            ]

        objects = [(f"ok{k}", normal_obj(k)) for k in range(4)]
        objects.append(("too_few", [box_mesh((0, 0, 0), (1, 1, 1))]))
        big = box_mesh((0, 0, 0), (2, 2, 2))
        sliver = box_mesh((0, 0, 1.02), (1.99, 1.99, 0.01))
        objects.append(("dominated", [big, sliver]))
        decisions = curate_corpus(objects, res=128)
        by_id = {d.object_id: d for d in decisions}
        assert by_id["too_few"].failed_rule == RULE_MESH_COUNT
        assert by_id["dominated"].failed_rule == RULE_DOMINANCE
        assert sum(d.verdict for d in decisions) == 4

    def test_decisions_deterministic(self):
        objects = [
            ("a", [box_mesh((0, 0, 0), (1, 1, 1)), box_mesh((2, 0, 0), (1, 1, 1))]),
            ("b", [box_mesh((0, 0, 0), (1, 2, 1)), box_mesh((0, 3, 0), (1, 1, 1))]),
        ]
        d1 = curate_corpus(objects, res=96)
        d2 = curate_corpus(objects, res=96)
        assert [(d.object_id, d.verdict, d.failed_rule) for d in d1] == [
            (d.object_id, d.verdict, d.failed_rule) for d in d2
        ]
