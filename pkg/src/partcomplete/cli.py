"""Command line interface: one binary exposing every pipeline stage.

All randomness flows from one root seed per invocation (split per stage by
labeled hashing), so rerunning any command with the same config and seed
reproduces its primary outputs byte for byte.  Exit codes: 0 ok, 1 bad
input, 2 internal error.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from .config import ConfigError, RunConfig, config_echo, derive_seed, load_config, make_config
from .geometry import GeometryError
from .meshio import MeshIOError, load_mesh, write_mesh


class InputError(click.ClickException):
    exit_code = 1


def _config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(config_echo(cfg), sort_keys=True).encode()
    return hashlib.blake2b(blob, digest_size=8).hexdigest()


def _header_record(cfg: RunConfig) -> str:
    return json.dumps({"type": "header", "config": config_echo(cfg)}, sort_keys=True)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON or TOML config overrides.")
@click.option("--preset", type=click.Choice(["desk", "paper"]), default="desk")
@click.option("--seed", type=int, default=None, help="Root seed (overrides config).")
@click.pass_context
def cli(ctx, config_path, preset, seed):
    """Part-level 3D shape completion pipeline."""
    threads = os.environ.get("PARTCOMPLETE_THREADS")
    if threads:
        import torch

        torch.set_num_threads(int(threads))
    try:
        if config_path:
            cfg = load_config(config_path, preset=preset, seed=seed)
        else:
            cfg = make_config(preset, seed=seed)
    except ConfigError as exc:
        raise InputError(str(exc)) from exc
    ctx.obj = cfg


def _load_bundles(data_dir: Path, split: str | None = None):
    from .curation.pairs import load_part_object

    manifest = data_dir / "manifest.jsonl"
    objects = []
    if manifest.exists():
        for line in manifest.read_text().splitlines():
            rec = json.loads(line)
            if rec.get("type") == "header":
                continue
            if split and rec.get("split") != split:
                continue
            bundle = data_dir / "objects" / rec["id"]
            if bundle.exists():
                objects.append(load_part_object(bundle))
    else:
        root = data_dir / "objects" if (data_dir / "objects").exists() else data_dir
        for d in sorted(p for p in root.iterdir() if (p / "masks.json").exists()):
            objects.append(load_part_object(d))
    if not objects:
        raise InputError(f"no bundles found under {data_dir}" + (f" (split={split})" if split else ""))
    return objects


@cli.command()
@click.option("--n", type=int, required=True, help="Number of assemblies.")
@click.option("--out", type=click.Path(), required=True)
@click.option("--occlusion", type=float, default=0.15)
@click.option("--families", default="table,chair,lamp,stacked")
@click.option("--udf-resolution", type=int, default=None)
@click.pass_obj
def gen(cfg: RunConfig, n, out, occlusion, families, udf_resolution):
    """Generate a synthetic whole-part dataset with train/val/test splits."""
    from .curation.pairs import save_part_object
    from .synthetic import AssemblySpec, SpecError, gen_assembly, gen_dataset

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    fams = tuple(f.strip() for f in families.split(",") if f.strip())
    try:
        items = gen_dataset(n, fams, seed=cfg.seed, occlusion=occlusion)
    except SpecError as exc:
        raise InputError(str(exc)) from exc
    res = udf_resolution or cfg.udf_resolution
    lines = [_header_record(cfg)]
    for it in items:
        spec = AssemblySpec(it["family"], it["seed"], occlusion=it["occlusion"])
        obj = gen_assembly(
            spec, udf_resolution=res, n_views=cfg.n_views, visibility_res=cfg.visibility_res
        )
        obj = type(obj)(it["id"], obj.whole, obj.parts, obj.category, obj.norm)
        save_part_object(out / "objects" / it["id"], obj)
        lines.append(json.dumps(it, sort_keys=True))
        click.echo(f"generated {it['id']} ({obj.n_parts} parts, split={it['split']})", err=True)
    (out / "manifest.jsonl").write_text("\n".join(lines) + "\n")
    click.echo(f"wrote {n} bundles to {out}")


@cli.command()
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True,
              help="JSON lines: {id, parts: [mesh paths]}.")
@click.option("--out", type=click.Path(), required=True)
@click.pass_obj
def curate(cfg: RunConfig, manifest_path, out):
    """Apply the corpus filtering rules and write decisions plus a pass list."""
    from .curation import curate_corpus

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [
        json.loads(line)
        for line in Path(manifest_path).read_text().splitlines()
        if line.strip()
    ]
    rows = [r for r in rows if r.get("type") != "header"]
    if not rows:
        raise InputError("manifest is empty")
    objects = []
    base = Path(manifest_path).parent
    for r in rows:
        try:
            parts = [load_mesh(base / p) for p in r["parts"]]
        except MeshIOError as exc:
            raise InputError(str(exc)) from exc
        objects.append((r["id"], parts))
    decisions = curate_corpus(objects, res=cfg.silhouette_res)
    lines = [_header_record(cfg)]
    passing = []
    for d in decisions:
        lines.append(
            json.dumps(
                {
                    "object_id": d.object_id,
                    "verdict": "pass" if d.verdict else "fail",
                    "failed_rule": d.failed_rule,
                    "diagnostics": d.diagnostics,
                },
                sort_keys=True,
            )
        )
        if d.verdict:
            passing.append(d.object_id)
    (out / "decisions.jsonl").write_text("\n".join(lines) + "\n")
    (out / "pass_list.txt").write_text(
        f"# config {_config_hash(cfg)}\n" + "\n".join(passing) + "\n"
    )
    click.echo(f"{len(passing)}/{len(decisions)} objects pass")


@cli.command()
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--pass-list", "pass_list", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_obj
def pairs(cfg: RunConfig, manifest_path, pass_list, out):
    """Build whole-part pair bundles for every object on the pass list."""
    from .curation.pairs import PipelineError, make_whole_part_pairs, save_part_object

    out = Path(out)
    keep = {
        line.strip()
        for line in Path(pass_list).read_text().splitlines()
        if line.strip() and not line.startswith("#")
    }
    rows = [
        json.loads(line)
        for line in Path(manifest_path).read_text().splitlines()
        if line.strip()
    ]
    rows = [r for r in rows if r.get("type") != "header" and r["id"] in keep]
    if not rows:
        raise InputError("no objects selected by the pass list")
    base = Path(manifest_path).parent
    n_ok = 0
    lines = [_header_record(cfg)]
    for r in rows:
        parts = [load_mesh(base / p) for p in r["parts"]]
        try:
            obj = make_whole_part_pairs(
                r["id"],
                parts,
                category=r.get("category", ""),
                udf_resolution=cfg.udf_resolution,
                tau_cells=cfg.tau_cells,
                n_views=cfg.n_views,
                visibility_res=cfg.visibility_res,
            )
        except PipelineError as exc:
            click.echo(f"rejected {r['id']}: {exc}", err=True)
            lines.append(json.dumps({"id": r["id"], "rejected": str(exc)}, sort_keys=True))
            continue
        save_part_object(out / "objects" / r["id"], obj)
        lines.append(json.dumps({"id": r["id"], "n_parts": obj.n_parts}, sort_keys=True))
        n_ok += 1
    (out / "manifest.jsonl").write_text("\n".join(lines) + "\n")
    click.echo(f"built {n_ok}/{len(rows)} bundles")


@cli.command()
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--stage", type=click.Choice(["vae", "flow", "both"]), default="both")
@click.option("--vae-steps", type=int, default=None)
@click.option("--flow-steps", type=int, default=None)
@click.option("--resume", type=click.Path(exists=True), default=None)
@click.option("--split", default="train", help="Manifest split to train on ('' = all).")
@click.pass_obj
def train(cfg: RunConfig, data_dir, out, stage, vae_steps, flow_steps, resume, split):
    """Train the VAE and/or the part flow on a bundle directory."""
    import torch

    from .neural.data import CompletionDataset, vae_training_meshes
    from .neural.model import PartCompletionModel
    from .neural.train import TrainingDiverged, train_flow, train_vae

    objects = _load_bundles(Path(data_dir), split or None)
    out = Path(out)
    torch.manual_seed(cfg.seed)
    model = PartCompletionModel(cfg)
    log = lambda msg: click.echo(msg, err=True)  # noqa: E731
    if stage == "flow" and resume is None:
        raise InputError("--stage flow requires --resume with a trained checkpoint")
    try:
        if stage in ("vae", "both"):
            res = train_vae(
                model, vae_training_meshes(objects), cfg, out,
                steps=vae_steps, resume=resume if stage == "vae" else None, log=log,
            )
            click.echo(f"vae checkpoint: {res.checkpoint}")
        if stage in ("flow", "both"):
            flow_resume = None
            if stage == "flow":
                from .neural.checkpoint import load_checkpoint
                from .neural.train import load_training_checkpoint

                _, meta = load_checkpoint(resume)
                if meta.get("stage") == "flow":
                    flow_resume = resume  # continue flow training in place
                else:
                    load_training_checkpoint(resume, model, None, "flow")
            ds = CompletionDataset(objects, cfg)
            res = train_flow(
                model, ds, cfg, out, steps=flow_steps, resume=flow_resume, log=log
            )
            click.echo(f"model checkpoint: {res.checkpoint}")
    except TrainingDiverged as exc:
        raise click.ClickException(str(exc)) from exc


@cli.command()
@click.option("--checkpoint", "ckpt", type=click.Path(exists=True), required=True)
@click.option("--whole", "whole_path", type=click.Path(exists=True), required=True)
@click.option("--masks", "masks_path", type=click.Path(exists=True), required=True,
              help="masks.json with per-face part labels.")
@click.option("--part-id", type=int, default=None, help="Single part (default: all).")
@click.option("--out", type=click.Path(), required=True)
@click.option("--guidance", type=float, default=None)
@click.pass_obj
def complete(cfg: RunConfig, ckpt, whole_path, masks_path, part_id, out, guidance):
    """Run part completion for one whole mesh and its surface masks."""
    from .fields import FieldError
    from .neural.inference import complete_part
    from .neural.model import PartCompletionModel
    from .neural.train import load_training_checkpoint

    model = PartCompletionModel(cfg)
    load_training_checkpoint(ckpt, model, None, "flow")
    whole = load_mesh(whole_path)
    meta = json.loads(Path(masks_path).read_text())
    labels = np.asarray(meta["face_labels"], dtype=np.int64)
    if len(labels) != whole.n_faces:
        raise InputError("face label count does not match the whole mesh")
    n_parts = int(meta.get("n_parts", labels.max() + 1))
    ids = [part_id] if part_id is not None else list(range(n_parts))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    comment = f"partcomplete-config {_config_hash(cfg)}"
    n_ok = 0
    for pid in ids:
        if pid < 0 or pid >= n_parts:
            raise InputError(f"part id {pid} outside [0, {n_parts})")
        mask = labels == pid
        if not mask.any():
            raise InputError(f"mask {pid} selects no faces")
        try:
            mesh = complete_part(
                model, whole, mask, cfg,
                seed=derive_seed(cfg.seed, f"complete:{pid}"), guidance=guidance,
            )
        except (FieldError, GeometryError) as exc:
            click.echo(f"part {pid}: completion failed ({exc})", err=True)
            continue
        write_mesh(out / f"part_{pid}.ply", mesh, comment=comment)
        n_ok += 1
    click.echo(f"completed {n_ok}/{len(ids)} parts -> {out}")


def _evaluate_bundles(model, objects, cfg: RunConfig, guidance=None, seed_label="eval"):
    from .evalbench import evaluate_part
    from .neural.inference import complete_object

    results = []
    for obj in objects:
        preds = complete_object(
            model, obj, cfg, seed=derive_seed(cfg.seed, f"{seed_label}:{obj.object_id}"),
            guidance=guidance,
        )
        for pid, pred in enumerate(preds):
            results.append(
                evaluate_part(
                    pred,
                    obj.parts[pid],
                    object_id=obj.object_id,
                    part_id=pid,
                    category=obj.category,
                    n_points=cfg.eval_points,
                    voxel_res=cfg.voxel_resolution,
                    seed=derive_seed(cfg.seed, f"{seed_label}:metrics:{obj.object_id}:{pid}"),
                )
            )
    return results


@cli.command("eval")
@click.option("--pred", "pred_dir", type=click.Path(exists=True), required=True,
              help="Directory of completed parts: <object_id>/part_<k>.ply")
@click.option("--gt", "gt_dir", type=click.Path(exists=True), required=True,
              help="Ground-truth bundle directory.")
@click.option("--out", "out_stem", type=click.Path(), required=True)
@click.pass_obj
def eval_cmd(cfg: RunConfig, pred_dir, gt_dir, out_stem):
    """Compare completed parts against ground-truth bundles."""
    from .evalbench import aggregate, evaluate_part, write_results_jsonl

    objects = _load_bundles(Path(gt_dir))
    pred_dir = Path(pred_dir)
    results = []
    for obj in objects:
        for pid in range(obj.n_parts):
            pred_path = pred_dir / obj.object_id / f"part_{pid}.ply"
            pred = load_mesh(pred_path) if pred_path.exists() else None
            results.append(
                evaluate_part(
                    pred,
                    obj.parts[pid],
                    object_id=obj.object_id,
                    part_id=pid,
                    category=obj.category,
                    n_points=cfg.eval_points,
                    voxel_res=cfg.voxel_resolution,
                    seed=derive_seed(cfg.seed, f"eval:{obj.object_id}:{pid}"),
                )
            )
    report = aggregate(results, config_echo(cfg))
    out_stem = Path(out_stem)
    report.write(out_stem)
    write_results_jsonl(out_stem.with_suffix(".parts.jsonl"), results)
    click.echo(
        f"evaluated {report.n_parts} parts: success {report.success_rate:.3f}, "
        f"chamfer {report.mean_instance.get('chamfer', float('nan')):.4f}"
    )


@cli.command()
@click.option("--checkpoint", "ckpt", type=click.Path(exists=True), required=True)
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_csv", type=click.Path(), required=True)
@click.option("--scales", default="1.5,3.5,5,7.5")
@click.option("--split", default="test")
@click.option("--limit", type=int, default=None, help="Evaluate at most N objects.")
@click.pass_obj
def sweep(cfg: RunConfig, ckpt, data_dir, out_csv, scales, split, limit):
    """Guidance-scale sweep; emits a metric x scale CSV."""
    from .evalbench import aggregate, write_sweep_csv
    from .neural.model import PartCompletionModel
    from .neural.train import load_training_checkpoint

    try:
        scale_list = [float(s) for s in scales.split(",") if s.strip()]
    except ValueError as exc:
        raise InputError(f"bad scale list {scales!r}") from exc
    if not scale_list:
        raise InputError("empty scale list")
    objects = _load_bundles(Path(data_dir), split or None)
    if limit:
        objects = objects[:limit]
    model = PartCompletionModel(cfg)
    load_training_checkpoint(ckpt, model, None, "flow")
    reports = {}
    for s in scale_list:
        results = _evaluate_bundles(model, objects, cfg, guidance=s, seed_label=f"sweep:{s:g}")
        reports[s] = aggregate(results, config_echo(cfg))
        click.echo(
            f"S={s:g}: success {reports[s].success_rate:.3f}, "
            f"chamfer {reports[s].mean_instance.get('chamfer', float('nan')):.4f}",
            err=True,
        )
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(out_csv, "w") as fh:
        fh.write(f"# config {_config_hash(cfg)}\n")
    import csv as _csv

    with open(out_csv, "a", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["metric"] + [f"S={s:g}" for s in sorted(reports)])
        from .evalbench import METRICS

        for metric in METRICS:
            w.writerow(
                [metric]
                + [repr(reports[s].mean_instance.get(metric, float("nan"))) for s in sorted(reports)]
            )
        w.writerow(["success"] + [repr(reports[s].success_rate) for s in sorted(reports)])
    click.echo(f"wrote {out_csv}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        return 1
    except (MeshIOError, ConfigError, GeometryError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # internal failure
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
