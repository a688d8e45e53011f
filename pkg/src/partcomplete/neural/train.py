"""Two-stage training: shape VAE on complete geometry, then the rectified
flow on frozen latents with joint CFG dropout of both condition streams.

Every step draws its batch, point samples, and noise from seeds derived off
the run seed, so a rerun with the same config reproduces the checkpoint
byte-for-byte (same machine / thread count)."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..config import RunConfig, derive_seed
from ..geometry import TriMesh
from ..kernels import MeshQuery
from .checkpoint import load_checkpoint, save_checkpoint
from .data import CompletionDataset, occupancy_sample
from .flow import flow_loss
from .model import PartCompletionModel
from .vae import vae_loss

CHECKPOINT_EVERY = 500


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int, last_checkpoint: str | None):
        super().__init__(
            f"non-finite loss at step {step}; last good checkpoint: {last_checkpoint}"
        )
        self.last_checkpoint = last_checkpoint


@dataclass
class TrainResult:
    checkpoint: Path
    loss_csv: Path
    steps: int
    final_loss: float


def make_optimizer(params, cfg: RunConfig, lr: float | None = None) -> torch.optim.AdamW:
    # uniform lr across all groups: weighted per-module rates destabilize
    return torch.optim.AdamW(
        params, lr=lr if lr is not None else cfg.lr, betas=cfg.betas, weight_decay=cfg.weight_decay
    )


def _stage_params(model: PartCompletionModel, stage: str):
    if stage == "vae":
        return list(model.vae.named_parameters(prefix="vae"))
    named = []
    for mod, prefix in (
        (model.context_encoder, "context_encoder"),
        (model.local_encoder, "local_encoder"),
        (model.velocity, "velocity"),
    ):
        named.extend(mod.named_parameters(prefix=prefix))
    named.append(("null_context", model.null_context))
    named.append(("null_local", model.null_local))
    return named


def save_training_checkpoint(
    path, model: PartCompletionModel, opt: torch.optim.AdamW | None, step: int, stage: str, cfg: RunConfig
) -> None:
    from ..config import config_echo

    tensors: dict = dict(model.state_dict())
    if opt is not None:
        names = [n for n, _ in _stage_params(model, stage)]
        params = [p for _, p in _stage_params(model, stage)]
        for name, p in zip(names, params):
            st = opt.state.get(p)
            if not st:
                continue
            tensors[f"opt.{name}.exp_avg"] = st["exp_avg"]
            tensors[f"opt.{name}.exp_avg_sq"] = st["exp_avg_sq"]
            tensors[f"opt.{name}.step"] = st["step"]
    save_checkpoint(path, tensors, {"step": step, "stage": stage, "config": config_echo(cfg)})


def load_training_checkpoint(
    path, model: PartCompletionModel, opt: torch.optim.AdamW | None, stage: str
) -> int:
    tensors, meta = load_checkpoint(path)
    dtype = next(model.parameters()).dtype
    state = {}
    for name, arr in tensors.items():
        if name.startswith("opt."):
            continue
        t = torch.from_numpy(np.array(arr))
        state[name] = t.to(dtype) if t.is_floating_point() else t
    model.load_state_dict(state)
    if opt is not None:
        # one dummy-free state rebuild: attach moments to live parameters
        for name, p in _stage_params(model, stage):
            key = f"opt.{name}.exp_avg"
            if key in tensors:
                opt.state[p] = {
                    "step": torch.from_numpy(
                        np.array(tensors[f"opt.{name}.step"])
                    ).to(torch.float32),
                    "exp_avg": torch.from_numpy(np.array(tensors[key])).to(dtype),
                    "exp_avg_sq": torch.from_numpy(
                        np.array(tensors[f"opt.{name}.exp_avg_sq"])
                    ).to(dtype),
                }
    return int(meta["step"])


class _LossLog:
    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(["step", "loss", "lr", "drop_flag_fraction"])

    def row(self, step: int, loss: float, lr: float, drop: float) -> None:
        self._w.writerow([step, repr(float(loss)), repr(float(lr)), repr(float(drop))])

    def close(self):
        self._fh.close()


def train_vae(
    model: PartCompletionModel,
    meshes: list[TriMesh],
    cfg: RunConfig,
    out_dir,
    steps: int | None = None,
    resume: str | None = None,
    log=None,
) -> TrainResult:
    """Overfit/fit the VAE on complete meshes with occupancy supervision."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    steps = steps if steps is not None else cfg.vae_steps
    ckpt_path = out_dir / "vae.ckpt"
    queries = [MeshQuery(m.vertices, m.faces) for m in meshes]
    opt = make_optimizer([p for _, p in _stage_params(model, "vae")], cfg, lr=cfg.vae_lr)
    start = 0
    if resume:
        start = load_training_checkpoint(resume, model, opt, "vae")
    logger = _LossLog(out_dir / "vae_loss.csv")
    last_saved = None
    loss_val = float("nan")
    for step in range(start, steps):
        rng = np.random.default_rng(derive_seed(cfg.seed, f"vae:order:{step}"))
        items = rng.integers(0, len(meshes), size=cfg.batch_size)
        batch = [
            occupancy_sample(
                meshes[i], queries[i], cfg, derive_seed(cfg.seed, f"vae:{step}:{k}")
            )
            for k, i in enumerate(items)
        ]
        dtype = next(model.parameters()).dtype
        pos = torch.from_numpy(np.stack([b.pos for b in batch])).to(dtype)
        nrm = torch.from_numpy(np.stack([b.nrm for b in batch])).to(dtype)
        fidx = torch.from_numpy(np.stack([b.fps_idx for b in batch]))
        qpts = torch.from_numpy(np.stack([b.queries for b in batch])).to(dtype)
        occ = torch.from_numpy(np.stack([b.occ for b in batch])).to(dtype)

        mean, logvar = model.vae.encode(pos, nrm, fidx)
        gen = torch.Generator().manual_seed(derive_seed(cfg.seed, f"vae:noise:{step}"))
        z = model.vae.reparameterize(mean, logvar, generator=gen)
        logits = model.vae.decode(z, qpts)
        loss, _ = vae_loss(logits, occ, mean, logvar, cfg.kl_weight)
        loss_val = float(loss.detach())
        if not np.isfinite(loss_val):
            logger.close()
            raise TrainingDiverged(step, str(last_saved) if last_saved else None)
        opt.zero_grad()
        loss.backward()
        opt.step()
        logger.row(step, loss_val, cfg.vae_lr, 0.0)
        if log and step % 100 == 0:
            log(f"vae step {step}: loss {loss_val:.5f}")
        if (step + 1) % CHECKPOINT_EVERY == 0:
            save_training_checkpoint(ckpt_path, model, opt, step + 1, "vae", cfg)
            last_saved = ckpt_path
    save_training_checkpoint(ckpt_path, model, opt, steps, "vae", cfg)
    logger.close()
    return TrainResult(ckpt_path, out_dir / "vae_loss.csv", steps, loss_val)


def precompute_latent_stats(
    model: PartCompletionModel, dataset: CompletionDataset, cfg: RunConfig
) -> list[tuple[torch.Tensor, torch.Tensor]]:
    """Frozen-VAE (mean, logvar) per part prompt, computed once."""
    out = []
    with torch.no_grad():
        for item in range(len(dataset)):
            mesh = dataset.part_mesh(item)
            from ..sampling import sample_surface

            cloud = sample_surface(
                mesh, cfg.n_complete_points, derive_seed(cfg.seed, f"latent:{item}")
            )
            _, mean, logvar = model.encode_cloud(cloud, seed=0, sample=False)
            out.append((mean[0].detach(), logvar[0].detach()))
    return out


def _encode_conditions(model, batch, dtype):
    def t(key):
        return torch.from_numpy(np.stack([getattr(b, key) for b in batch])).to(dtype)

    c_ctx = model.context_encoder(
        t("q_pos"), t("q_nrm"), t("whole_pos"), t("whole_nrm"), t("whole_mask")
    )
    c_loc = model.local_encoder(
        t("q_pos_local"), t("q_nrm_local"), t("s_pos_local"), t("s_nrm_local")
    )
    return c_ctx, c_loc


def train_flow(
    model: PartCompletionModel,
    dataset: CompletionDataset,
    cfg: RunConfig,
    out_dir,
    steps: int | None = None,
    resume: str | None = None,
    log=None,
) -> TrainResult:
    """Train the velocity network and conditioning encoders; the VAE is
    frozen and its per-part latent statistics are precomputed."""
    if len(dataset) == 0:
        raise ValueError("empty training dataset")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    steps = steps if steps is not None else cfg.flow_steps
    ckpt_path = out_dir / "model.ckpt"
    model.vae.requires_grad_(False)
    opt = make_optimizer([p for _, p in _stage_params(model, "flow")], cfg)
    start = 0
    if resume:
        start = load_training_checkpoint(resume, model, opt, "flow")
    stats = precompute_latent_stats(model, dataset, cfg)
    logger = _LossLog(out_dir / "flow_loss.csv")
    dtype = next(model.parameters()).dtype
    last_saved = None
    loss_val = float("nan")
    for step in range(start, steps):
        rng = np.random.default_rng(derive_seed(cfg.seed, f"flow:order:{step}"))
        items = rng.integers(0, len(dataset), size=cfg.batch_size)
        batch = [
            dataset.conditions(int(i), derive_seed(cfg.seed, f"flow:{step}:{k}"))
            for k, i in enumerate(items)
        ]
        c_ctx, c_loc = _encode_conditions(model, batch, dtype)
        drop = rng.random(cfg.batch_size) < cfg.p_drop
        if drop.any():
            dm = torch.from_numpy(drop).view(-1, 1, 1)
            c_ctx = torch.where(dm, model.null_context.unsqueeze(0).to(dtype), c_ctx)
            c_loc = torch.where(dm, model.null_local.unsqueeze(0).to(dtype), c_loc)

        gen = torch.Generator().manual_seed(derive_seed(cfg.seed, f"flow:noise:{step}"))
        z0 = torch.stack(
            [
                stats[i][0]
                + torch.exp(0.5 * stats[i][1])
                * torch.randn(stats[i][0].shape, generator=gen, dtype=stats[i][0].dtype)
                for i in items
            ]
        ).to(dtype)
        t = torch.rand(cfg.batch_size, generator=gen, dtype=dtype)
        eps = torch.randn(z0.shape, generator=gen, dtype=dtype)
        loss = flow_loss(model.velocity, z0, t, eps, c_ctx, c_loc)
        loss_val = float(loss.detach())
        if not np.isfinite(loss_val):
            logger.close()
            raise TrainingDiverged(step, str(last_saved) if last_saved else None)
        opt.zero_grad()
        loss.backward()
        opt.step()
        logger.row(step, loss_val, cfg.lr, float(drop.mean()))
        if log and step % 100 == 0:
            log(f"flow step {step}: loss {loss_val:.5f}")
        if (step + 1) % CHECKPOINT_EVERY == 0:
            save_training_checkpoint(ckpt_path, model, opt, step + 1, "flow", cfg)
            last_saved = ckpt_path
    save_training_checkpoint(ckpt_path, model, opt, steps, "flow", cfg)
    logger.close()
    return TrainResult(ckpt_path, out_dir / "flow_loss.csv", steps, loss_val)
