import numpy as np
import pytest

from partcomplete.curation import curate_corpus
from partcomplete.kernels import MeshQuery
from partcomplete.sampling import sample_surface
from partcomplete.synthetic import (
    FAMILIES,
    AssemblySpec,
    SpecError,
    gen_assembly,
    gen_dataset,
    measure_occlusion,
    raw_assembly_parts,
)


class TestSpecs:
    def test_unknown_family_rejected(self):
        with pytest.raises(SpecError):
            AssemblySpec("boat", 0)

    def test_full_occlusion_infeasible(self):
        with pytest.raises(SpecError):
            AssemblySpec("table", 0, occlusion=1.0)


class TestAssemblies:
    def test_table_has_five_parts(self):
        parts = raw_assembly_parts(AssemblySpec("table", 7))
        assert len(parts) == 5

    def test_deterministic_generation(self):
        a = raw_assembly_parts(AssemblySpec("lamp", 3))
        b = raw_assembly_parts(AssemblySpec("lamp", 3))
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.vertices, pb.vertices)
            assert np.array_equal(pa.faces, pb.faces)

    def test_part_counts_in_curation_range(self):
        for family in FAMILIES:
            for seed in range(3):
                parts = raw_assembly_parts(AssemblySpec(family, seed))
                assert 2 <= len(parts) <= 15

    def test_zero_occlusion_fully_visible(self):
        spec = AssemblySpec("table", 11, occlusion=0.0)
        occ = measure_occlusion(spec, n_views=162, res=256)
        assert occ < 0.03

    @pytest.mark.parametrize("family", ["table", "chair", "lamp"])
    def test_occlusion_within_tolerance(self, family):
        spec = AssemblySpec(family, 5, occlusion=0.15)
        occ = measure_occlusion(spec, n_views=162, res=256)
        assert abs(occ - 0.15) <= 0.1

    def test_stacked_occlusion_increases_with_target(self):
        lo = measure_occlusion(AssemblySpec("stacked", 9, occlusion=0.05), n_views=42)
        hi = measure_occlusion(AssemblySpec("stacked", 9, occlusion=0.35), n_views=42)
        assert hi > lo

    def test_gen_assembly_deterministic(self):
        spec = AssemblySpec("table", 2)
        a = gen_assembly(spec, udf_resolution=48, n_views=42, visibility_res=128)
        b = gen_assembly(spec, udf_resolution=48, n_views=42, visibility_res=128)
        assert np.array_equal(a.whole.vertices, b.whole.vertices)
        assert np.array_equal(a.whole.face_labels, b.whole.face_labels)

    def test_patch_within_two_cells_of_part(self):
        spec = AssemblySpec("table", 13, occlusion=0.2)
        obj = gen_assembly(spec, udf_resolution=64, n_views=42, visibility_res=196)
        cell = 2.0 * 1.16 / 64
        for pid in range(obj.n_parts):
            patch = obj.patch_mesh(pid)
            if patch.n_faces == 0:
                continue
            pts = sample_surface(patch, 500, seed=pid).positions
            part = obj.parts[pid]
            d = MeshQuery(part.vertices, part.faces).distance(pts)
            assert d.max() <= 2 * cell

    def test_generated_objects_pass_curation(self):
        objects = []
        for i, family in enumerate(FAMILIES):
            parts = raw_assembly_parts(AssemblySpec(family, 20 + i))
            objects.append((f"{family}", parts))
        decisions = curate_corpus(objects, res=128)
        assert all(d.verdict for d in decisions)


class TestDataset:
    def test_exact_split_counts(self):
        items = gen_dataset(500, seed=1)
        splits = [it["split"] for it in items]
        assert splits.count("train") == 400
        assert splits.count("val") == 50
        assert splits.count("test") == 50

    def test_family_mix_within_two(self):
        items = gen_dataset(500, seed=1)
        for split, frac in (("train", 0.8), ("val", 0.1), ("test", 0.1)):
            counts = {}
            for it in items:
                if it["split"] == split:
                    counts[it["family"]] = counts.get(it["family"], 0) + 1
            target = 500 / len(FAMILIES) * frac
            assert all(abs(c - target) <= 2 for c in counts.values())

    def test_membership_stable_under_regeneration(self):
        a = gen_dataset(200, seed=3)
        b = gen_dataset(200, seed=3)
        assert a == b

    def test_n_must_be_positive(self):
        with pytest.raises(SpecError):
            gen_dataset(0)
