"""Set-latent shape VAE.

The encoder cross-attends FPS-subset queries over the full embedded point
cloud and emits per-token mean/logvar; the decoder self-attends the latent
set and answers occupancy-logit queries through a final cross-attention, so
every query is independent of every other query given the latents."""

from __future__ import annotations

import torch
from torch import nn

from ..config import ModelConfig
from .blocks import CrossAttentionBlock, SelfAttentionBlock
from .embed import posenc_width, positional_encoding


class ShapeVAE(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        w = cfg.vae_width
        pts_w = posenc_width(cfg.pos_freqs, with_normals=True)
        query_w = posenc_width(cfg.pos_freqs, with_normals=False)
        self.kv_in = nn.Linear(pts_w, w)
        self.q_in = nn.Linear(pts_w, w)
        self.enc_cross = CrossAttentionBlock(w, w, cfg.vae_heads)
        self.enc_self = nn.ModuleList(
            SelfAttentionBlock(w, cfg.vae_heads) for _ in range(cfg.vae_encoder_self_layers)
        )
        self.enc_norm = nn.LayerNorm(w)
        self.mean_head = nn.Linear(w, cfg.latent_dim)
        self.logvar_head = nn.Linear(w, cfg.latent_dim)

        self.dec_in = nn.Linear(cfg.latent_dim, w)
        self.dec_self = nn.ModuleList(
            SelfAttentionBlock(w, cfg.vae_heads) for _ in range(cfg.vae_decoder_self_layers)
        )
        self.query_in = nn.Linear(query_w, w)
        self.dec_cross = CrossAttentionBlock(w, w, cfg.vae_heads)
        self.dec_norm = nn.LayerNorm(w)
        self.occ_head = nn.Linear(w, 1)

    def encode(
        self, positions: torch.Tensor, normals: torch.Tensor, fps_idx: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """(B, N, 3) points with normals plus (B, M) FPS indices ->
        per-token (mean, logvar), each (B, M, latent_dim)."""
        feats = positional_encoding(positions, normals, n_freqs=self.cfg.pos_freqs)
        kv = self.kv_in(feats)
        sel = fps_idx.unsqueeze(-1).expand(-1, -1, feats.shape[-1])
        q = self.q_in(torch.gather(feats, 1, sel))
        h = self.enc_cross(q, kv)
        for blk in self.enc_self:
            h = blk(h)
        h = self.enc_norm(h)
        return self.mean_head(h), self.logvar_head(h)

    @staticmethod
    def reparameterize(
        mean: torch.Tensor,
        logvar: torch.Tensor,
        generator: torch.Generator | None = None,
        sample: bool = True,
    ) -> torch.Tensor:
        if not sample:
            return mean
        noise = torch.randn(
            mean.shape, generator=generator, dtype=mean.dtype, device=mean.device
        )
        return mean + torch.exp(0.5 * logvar) * noise

    def process_latents(self, z: torch.Tensor) -> torch.Tensor:
        """Latent self-attention stack (run once per decode batch)."""
        lat = self.dec_in(z)
        for blk in self.dec_self:
            lat = blk(lat)
        return lat

    def decode_processed(self, lat: torch.Tensor, queries: torch.Tensor) -> torch.Tensor:
        q = self.query_in(
            positional_encoding(queries, n_freqs=self.cfg.pos_freqs)
        )
        h = self.dec_cross(q, lat)
        return self.occ_head(self.dec_norm(h)).squeeze(-1)

    def decode(self, z: torch.Tensor, queries: torch.Tensor) -> torch.Tensor:
        """(B, M, D) latents and (B, Q, 3) query points -> (B, Q) logits."""
        return self.decode_processed(self.process_latents(z), queries)


def vae_loss(
    logits: torch.Tensor,
    occupancy: torch.Tensor,
    mean: torch.Tensor,
    logvar: torch.Tensor,
    kl_weight: float,
) -> tuple[torch.Tensor, dict]:
    """Binary cross-entropy on occupancy plus weighted Gaussian KL to the
    standard normal (KL summed over tokens/channels, averaged over batch)."""
    bce = torch.nn.functional.binary_cross_entropy_with_logits(
        logits, occupancy.to(logits.dtype)
    )
    kl = -0.5 * (1.0 + logvar - mean**2 - torch.exp(logvar))
    kl = kl.sum(dim=(-1, -2)).mean()
    loss = bce + kl_weight * kl
    return loss, {"bce": float(bce.detach()), "kl": float(kl.detach())}
