"""Analytic vs central finite-difference gradients for both objectives on a
sub-5k-parameter configuration at double precision."""

import numpy as np
import pytest
import torch

from partcomplete.config import make_config
from partcomplete.neural.flow import flow_loss
from partcomplete.neural.gradcheck import finite_difference_check
from partcomplete.neural.model import PartCompletionModel
from partcomplete.neural.vae import vae_loss

MICRO = dict(
    n_whole_points=24,
    n_part_query=3,
    n_part_surface=12,
    n_complete_points=16,
    n_occ_queries=8,
    model=dict(
        latent_tokens=2,
        latent_dim=3,
        width=6,
        heads=2,
        dit_layers=1,
        cond_dim=4,
        cond_self_layers=1,
        vae_width=6,
        vae_heads=2,
        vae_encoder_self_layers=1,
        vae_decoder_self_layers=1,
        pos_freqs=1,
        time_embed_dim=4,
    ),
)

REL_TOL = 1e-4


@pytest.fixture(scope="module")
def model():
    torch.manual_seed(11)
    m = PartCompletionModel(make_config(overrides=MICRO)).double()
    # zero-initialized output layers would hide gradient wiring mistakes
    with torch.no_grad():
        for name, p in m.named_parameters():
            if p.abs().max() == 0:
                p.add_(torch.randn_like(p) * 0.05)
    return m


def test_parameter_budget(model):
    n = sum(p.numel() for p in model.parameters())
    assert n <= 5000, f"{n} parameters exceeds the 5k gradcheck budget"


def test_flow_loss_gradients_match_fd(model):
    cfg = model.run_cfg
    rng = np.random.default_rng(0)
    b, m, d = 2, cfg.model.latent_tokens, cfg.model.latent_dim
    z0 = torch.tensor(rng.normal(size=(b, m, d)))
    eps = torch.tensor(rng.normal(size=(b, m, d)))
    t = torch.tensor(rng.uniform(0.1, 0.9, size=b))

    q_pos = torch.tensor(rng.normal(size=(b, 3, 3)) * 0.4)
    q_nrm = torch.tensor(rng.normal(size=(b, 3, 3)))
    q_nrm = q_nrm / q_nrm.norm(dim=-1, keepdim=True)
    w_pos = torch.tensor(rng.normal(size=(b, cfg.n_whole_points, 3)) * 0.6)
    w_nrm = torch.tensor(rng.normal(size=(b, cfg.n_whole_points, 3)))
    w_nrm = w_nrm / w_nrm.norm(dim=-1, keepdim=True)
    w_mask = torch.tensor(
        rng.integers(0, 2, size=(b, cfg.n_whole_points)).astype(np.float64)
    )
    s_pos = torch.tensor(rng.normal(size=(b, cfg.n_part_surface, 3)) * 0.5)
    s_nrm = torch.tensor(rng.normal(size=(b, cfg.n_part_surface, 3)))
    s_nrm = s_nrm / s_nrm.norm(dim=-1, keepdim=True)

    def loss_fn():
        c_ctx = model.context_encoder(q_pos, q_nrm, w_pos, w_nrm, w_mask)
        c_loc = model.local_encoder(q_pos, q_nrm, s_pos, s_nrm)
        # sample 0 dropped jointly: null tokens join the graph
        dm = torch.tensor([True, False]).view(-1, 1, 1)
        c_ctx = torch.where(dm, model.null_context.unsqueeze(0), c_ctx)
        c_loc = torch.where(dm, model.null_local.unsqueeze(0), c_loc)
        return flow_loss(model.velocity, z0, t, eps, c_ctx, c_loc)

    named = [
        (n, p)
        for n, p in model.named_parameters()
        if not n.startswith("vae.")
    ]
    worst = finite_difference_check(loss_fn, named)
    bad = {k: v for k, v in worst.items() if v > REL_TOL}
    assert not bad, f"gradient mismatches: {bad}"


def test_vae_loss_gradients_match_fd(model):
    cfg = model.run_cfg
    rng = np.random.default_rng(1)
    b, n = 2, cfg.n_complete_points
    pos = torch.tensor(rng.normal(size=(b, n, 3)) * 0.5)
    nrm = torch.tensor(rng.normal(size=(b, n, 3)))
    nrm = nrm / nrm.norm(dim=-1, keepdim=True)
    fidx = torch.tensor(
        np.stack([rng.choice(n, size=cfg.model.latent_tokens, replace=False) for _ in range(b)])
    )
    queries = torch.tensor(rng.uniform(-1, 1, size=(b, cfg.n_occ_queries, 3)))
    occ = torch.tensor(rng.integers(0, 2, size=(b, cfg.n_occ_queries)).astype(np.float64))
    noise = torch.tensor(rng.normal(size=(b, cfg.model.latent_tokens, cfg.model.latent_dim)))

    def loss_fn():
        mean, logvar = model.vae.encode(pos, nrm, fidx)
        z = mean + torch.exp(0.5 * logvar) * noise  # fixed noise: deterministic
        logits = model.vae.decode(z, queries)
        loss, _ = vae_loss(logits, occ, mean, logvar, kl_weight=1e-3)
        return loss

    named = [(n_, p) for n_, p in model.named_parameters() if n_.startswith("vae.")]
    worst = finite_difference_check(loss_fn, named)
    bad = {k: v for k, v in worst.items() if v > REL_TOL}
    assert not bad, f"gradient mismatches: {bad}"
