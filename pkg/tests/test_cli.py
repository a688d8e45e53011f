"""CLI wiring tests with a miniature config: every subcommand runs, outputs
are deterministic across reruns, and exit codes follow the 0/1/2 contract."""

import json
from pathlib import Path

import numpy as np
import pytest

from partcomplete.cli import main
from partcomplete.meshio import write_mesh
from partcomplete.primitives import box_mesh

TINY_CFG = {
    "n_whole_points": 256,
    "n_part_query": 32,
    "n_part_surface": 128,
    "n_complete_points": 256,
    "n_occ_queries": 64,
    "batch_size": 4,
    "vae_steps": 20,
    "flow_steps": 20,
    "n_steps": 5,
    "local_mc_resolution": 20,
    "eval_points": 1500,
    "udf_resolution": 40,
    "n_views": 42,
    "visibility_res": 96,
    "silhouette_res": 96,
    "model": {
        "latent_tokens": 8,
        "latent_dim": 16,
        "width": 32,
        "heads": 2,
        "dit_layers": 1,
        "cond_dim": 16,
        "cond_self_layers": 1,
        "vae_width": 32,
        "vae_heads": 2,
        "vae_encoder_self_layers": 1,
        "vae_decoder_self_layers": 1,
        "pos_freqs": 2,
        "time_embed_dim": 8,
    },
}


@pytest.fixture(scope="module")
def cfg_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "tiny.json"
    p.write_text(json.dumps(TINY_CFG))
    return str(p)


@pytest.fixture(scope="module")
def dataset(cfg_file, tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    rc = main(["--config", cfg_file, "--seed", "3", "gen", "--n", "5", "--out", str(out)])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def trained(cfg_file, dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    rc = main(
        ["--config", cfg_file, "--seed", "3", "train",
         "--data", str(dataset), "--out", str(out), "--split", ""]
    )
    assert rc == 0
    return out


class TestGen:
    def test_manifest_and_bundles(self, dataset):
        lines = (dataset / "manifest.jsonl").read_text().splitlines()
        header = json.loads(lines[0])
        assert header["type"] == "header" and "config" in header
        rows = [json.loads(x) for x in lines[1:]]
        assert len(rows) == 5
        for r in rows:
            assert (dataset / "objects" / r["id"] / "whole.ply").exists()

    def test_rerun_identical(self, cfg_file, dataset, tmp_path):
        out2 = tmp_path / "data2"
        rc = main(["--config", cfg_file, "--seed", "3", "gen", "--n", "5", "--out", str(out2)])
        assert rc == 0
        assert (out2 / "manifest.jsonl").read_text() == (dataset / "manifest.jsonl").read_text()
        for d in (dataset / "objects").iterdir():
            a = d / "whole.ply"
            b = out2 / "objects" / d.name / "whole.ply"
            assert a.read_bytes() == b.read_bytes()

    def test_bad_n_exits_1(self, cfg_file, tmp_path):
        rc = main(["--config", cfg_file, "gen", "--n", "0", "--out", str(tmp_path / "x")])
        assert rc == 1


class TestCurateAndPairs:
    @pytest.fixture(scope="class")
    def raw_manifest(self, tmp_path_factory):
        d = tmp_path_factory.mktemp("raw")
        rows = []
        # four normal objects, one too-few-parts, one dominated
        for k in range(4):
            paths = []
            for j, mesh in enumerate(
                [
                    box_mesh((0, 0, 0.5), (1.4, 1.0, 0.12)),
                    box_mesh((-0.5, -0.3, 0), (0.1, 0.1, 0.9)),
                    box_mesh((0.5, 0.3, 0), (0.1, 0.1, 0.9)),
                ]
            ):
                p = d / f"ok{k}_{j}.ply"
                write_mesh(p, mesh)
                paths.append(p.name)
            rows.append({"id": f"ok{k}", "parts": paths})
        p = d / "solo.ply"
        write_mesh(p, box_mesh((0, 0, 0), (1, 1, 1)))
        rows.append({"id": "solo", "parts": [p.name]})
        big = d / "big.ply"
        sliver = d / "sliver.ply"
        write_mesh(big, box_mesh((0, 0, 0), (2, 2, 2)))
        write_mesh(sliver, box_mesh((0, 0, 1.02), (1.99, 1.99, 0.01)))
        rows.append({"id": "dominated", "parts": [big.name, sliver.name]})
        mf = d / "manifest.jsonl"
        mf.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        return mf

    def test_curate_and_rerun_byte_identical(self, cfg_file, raw_manifest, tmp_path):
        out1 = tmp_path / "c1"
        out2 = tmp_path / "c2"
        for out in (out1, out2):
            rc = main(
                ["--config", cfg_file, "--seed", "1", "curate",
                 "--manifest", str(raw_manifest), "--out", str(out)]
            )
            assert rc == 0
        assert (out1 / "decisions.jsonl").read_bytes() == (out2 / "decisions.jsonl").read_bytes()
        passing = [
            ln for ln in (out1 / "pass_list.txt").read_text().splitlines()
            if ln and not ln.startswith("#")
        ]
        assert sorted(passing) == ["ok0", "ok1", "ok2", "ok3"]
        decisions = [
            json.loads(x) for x in (out1 / "decisions.jsonl").read_text().splitlines()[1:]
        ]
        by_id = {d["object_id"]: d for d in decisions}
        assert by_id["solo"]["failed_rule"] == "mesh_count"
        assert by_id["dominated"]["failed_rule"] == "dominance"

    def test_pairs_builds_bundles(self, cfg_file, raw_manifest, tmp_path):
        cdir = tmp_path / "cur"
        rc = main(
            ["--config", cfg_file, "--seed", "1", "curate",
             "--manifest", str(raw_manifest), "--out", str(cdir)]
        )
        assert rc == 0
        pdir = tmp_path / "pairs"
        rc = main(
            ["--config", cfg_file, "--seed", "1", "pairs",
             "--manifest", str(raw_manifest), "--pass-list", str(cdir / "pass_list.txt"),
             "--out", str(pdir)]
        )
        assert rc == 0
        built = sorted(p.name for p in (pdir / "objects").iterdir())
        assert built == ["ok0", "ok1", "ok2", "ok3"]
        meta = json.loads((pdir / "objects" / "ok0" / "masks.json").read_text())
        assert meta["n_parts"] == 3

    def test_empty_manifest_exits_1(self, cfg_file, tmp_path):
        mf = tmp_path / "empty.jsonl"
        mf.write_text("")
        rc = main(["--config", cfg_file, "curate", "--manifest", str(mf), "--out", str(tmp_path / "o")])
        assert rc == 1


class TestTrainCompleteEvalSweep:
    def test_train_outputs(self, trained):
        assert (trained / "model.ckpt").exists()
        assert (trained / "vae_loss.csv").exists()
        rows = np.genfromtxt(trained / "flow_loss.csv", delimiter=",", names=True)
        assert np.isfinite(rows["loss"]).all()

    def test_complete_writes_parts_or_fails_cleanly(self, cfg_file, dataset, trained, tmp_path):
        obj = sorted((dataset / "objects").iterdir())[0]
        out = tmp_path / "pred" / obj.name
        rc = main(
            ["--config", cfg_file, "--seed", "3", "complete",
             "--checkpoint", str(trained / "model.ckpt"),
             "--whole", str(obj / "whole.ply"), "--masks", str(obj / "masks.json"),
             "--out", str(out)]
        )
        assert rc == 0

    def test_complete_invalid_part_id_exits_1(self, cfg_file, dataset, trained, tmp_path):
        obj = sorted((dataset / "objects").iterdir())[0]
        rc = main(
            ["--config", cfg_file, "complete",
             "--checkpoint", str(trained / "model.ckpt"),
             "--whole", str(obj / "whole.ply"), "--masks", str(obj / "masks.json"),
             "--part-id", "99", "--out", str(tmp_path / "x")]
        )
        assert rc == 1

    def test_eval_missing_gt_exits_1(self, cfg_file, tmp_path):
        (tmp_path / "pred").mkdir()
        rc = main(
            ["--config", cfg_file, "eval", "--pred", str(tmp_path / "pred"),
             "--gt", str(tmp_path / "pred"), "--out", str(tmp_path / "rep")]
        )
        assert rc == 1

    def test_eval_report_shape(self, cfg_file, dataset, trained, tmp_path):
        # predictions = ground truth parts themselves -> perfect metrics
        pred = tmp_path / "pred"
        from partcomplete.curation.pairs import load_part_object

        for d in (dataset / "objects").iterdir():
            obj = load_part_object(d)
            (pred / obj.object_id).mkdir(parents=True)
            for k, part in enumerate(obj.parts):
                write_mesh(pred / obj.object_id / f"part_{k}.ply", part)
        rc = main(
            ["--config", cfg_file, "--seed", "3", "eval", "--pred", str(pred),
             "--gt", str(dataset), "--out", str(tmp_path / "rep")]
        )
        assert rc == 0
        report = json.loads((tmp_path / "rep.json").read_text())
        assert report["success_rate"] == 1.0
        assert report["mean_instance"]["chamfer"] == 0.0
        assert report["mean_instance"]["iou"] == 1.0
        csv_text = (tmp_path / "rep.csv").read_text()
        assert "mean (instance)" in csv_text and "mean (category)" in csv_text

    def test_sweep_custom_scales(self, cfg_file, dataset, trained, tmp_path):
        out_csv = tmp_path / "sweep.csv"
        rc = main(
            ["--config", cfg_file, "--seed", "3", "sweep",
             "--checkpoint", str(trained / "model.ckpt"), "--data", str(dataset),
             "--out", str(out_csv), "--scales", "1.5,3.5", "--split", "", "--limit", "1"]
        )
        assert rc == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0].startswith("# config")
        assert lines[1].split(",") == ["metric", "S=1.5", "S=3.5"]

    def test_sweep_empty_scales_exits_1(self, cfg_file, dataset, trained, tmp_path):
        rc = main(
            ["--config", cfg_file, "sweep", "--checkpoint", str(trained / "model.ckpt"),
             "--data", str(dataset), "--out", str(tmp_path / "s.csv"), "--scales", ""]
        )
        assert rc == 1


class TestConfig:
    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"definitely_not_a_key": 1}))
        rc = main(["--config", str(p), "gen", "--n", "1", "--out", str(tmp_path / "o")])
        assert rc == 1

    def test_paper_preset_values(self):
        from partcomplete.config import make_config

        cfg = make_config("paper")
        assert cfg.n_whole_points == 20480
        assert cfg.n_part_query == 512
        assert cfg.model.latent_tokens == 512
        assert cfg.model.width == 2048
        assert cfg.model.dit_layers == 10
        assert cfg.model.cond_dim == 512
        assert cfg.model.cond_self_layers == 8
        assert cfg.eval_points == 500_000

    def test_desk_preset_paper_constants(self):
        from partcomplete.config import make_config

        cfg = make_config("desk")
        assert cfg.lr == 1e-4
        assert cfg.guidance_scale == 3.5
        assert cfg.box_scale == 1.3
        assert cfg.voxel_resolution == 64
        assert cfg.p_drop == 0.1
        assert cfg.n_steps == 50

    def test_toml_config(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('n_whole_points = 512\n[model]\nlatent_tokens = 16\n')
        from partcomplete.config import load_config

        cfg = load_config(p)
        assert cfg.n_whole_points == 512
        assert cfg.model.latent_tokens == 16
