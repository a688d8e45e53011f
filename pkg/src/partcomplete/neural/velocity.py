"""Velocity network: transformer blocks with timestep scale/shift modulation
and two cross-attention conditioning streams (shape context, then local)."""

from __future__ import annotations

import torch
from torch import nn

from ..config import ModelConfig
from .blocks import FeedForward, MultiheadAttention
from .embed import timestep_embedding


class DiTBlock(nn.Module):
    def __init__(self, width: int, heads: int, cond_dim: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(width, elementwise_affine=False)
        self.mod1 = nn.Linear(width, 2 * width)
        self.attn = MultiheadAttention(width, width, heads)
        self.norm_ctx = nn.LayerNorm(width)
        self.cross_ctx = MultiheadAttention(width, cond_dim, heads)
        self.norm_loc = nn.LayerNorm(width)
        self.cross_loc = MultiheadAttention(width, cond_dim, heads)
        self.norm2 = nn.LayerNorm(width, elementwise_affine=False)
        self.mod2 = nn.Linear(width, 2 * width)
        self.ff = FeedForward(width)
        nn.init.zeros_(self.mod1.weight)
        nn.init.zeros_(self.mod1.bias)
        nn.init.zeros_(self.mod2.weight)
        nn.init.zeros_(self.mod2.bias)

    @staticmethod
    def _modulate(x, mod):
        scale, shift = mod.chunk(2, dim=-1)
        return x * (1.0 + scale.unsqueeze(1)) + shift.unsqueeze(1)

    def forward(self, x, temb, c_ctx, c_loc):
        h = self._modulate(self.norm1(x), self.mod1(temb))
        x = x + self.attn(h, h)
        x = x + self.cross_ctx(self.norm_ctx(x), c_ctx)
        x = x + self.cross_loc(self.norm_loc(x), c_loc)
        h = self._modulate(self.norm2(x), self.mod2(temb))
        return x + self.ff(h)


class VelocityNet(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        w = cfg.width
        self.token_in = nn.Linear(cfg.latent_dim, w)
        self.t_mlp = nn.Sequential(
            nn.Linear(cfg.time_embed_dim, w), nn.GELU(), nn.Linear(w, w)
        )
        self.blocks = nn.ModuleList(
            DiTBlock(w, cfg.heads, cfg.cond_dim) for _ in range(cfg.dit_layers)
        )
        self.norm_out = nn.LayerNorm(w, elementwise_affine=False)
        self.mod_out = nn.Linear(w, 2 * w)
        self.head = nn.Linear(w, cfg.latent_dim)
        # zero-init the output path: the initial field is exactly zero
        nn.init.zeros_(self.mod_out.weight)
        nn.init.zeros_(self.mod_out.bias)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(
        self,
        z_t: torch.Tensor,       # (B, M, D)
        t: torch.Tensor,         # (B,) continuous time in [0, 1]
        c_ctx: torch.Tensor,     # (B, Nc, cond_dim)
        c_loc: torch.Tensor,     # (B, Nl, cond_dim)
    ) -> torch.Tensor:
        temb = self.t_mlp(timestep_embedding(t, self.cfg.time_embed_dim))
        x = self.token_in(z_t)
        for blk in self.blocks:
            x = blk(x, temb, c_ctx, c_loc)
        h = DiTBlock._modulate(self.norm_out(x), self.mod_out(temb))
        return self.head(h)
