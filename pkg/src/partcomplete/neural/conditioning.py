"""Conditioning encoders for part completion.

Context encoder: part FPS queries attend over the mask-highlighted whole
cloud (whole-shape frame) to capture where the part lives and what surrounds
it.  Local encoder: the same queries, renormalized to the part's own unit
box, attend over the dense part samples to capture fine geometry."""

from __future__ import annotations

import torch
from torch import nn

from ..config import ModelConfig
from .blocks import CrossAttentionBlock, SelfAttentionBlock
from .embed import posenc_width, positional_encoding


class ConditionEncoder(nn.Module):
    def __init__(self, cfg: ModelConfig, kv_has_mask: bool):
        super().__init__()
        self.cfg = cfg
        self.kv_has_mask = kv_has_mask
        d = cfg.cond_dim
        q_w = posenc_width(cfg.pos_freqs, with_normals=True)
        kv_w = posenc_width(cfg.pos_freqs, with_normals=True, with_extra=kv_has_mask)
        self.q_in = nn.Linear(q_w, d)
        self.kv_in = nn.Linear(kv_w, d)
        self.cross = CrossAttentionBlock(d, d, cfg.heads)
        self.selfs = nn.ModuleList(
            SelfAttentionBlock(d, cfg.heads) for _ in range(cfg.cond_self_layers)
        )
        self.norm = nn.LayerNorm(d)

    def forward(
        self,
        q_pos: torch.Tensor,
        q_nrm: torch.Tensor,
        kv_pos: torch.Tensor,
        kv_nrm: torch.Tensor,
        kv_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        if self.kv_has_mask and kv_mask is None:
            raise ValueError("this encoder requires the binary mask channel")
        if not self.kv_has_mask and kv_mask is not None:
            raise ValueError("this encoder does not take a mask channel")
        nf = self.cfg.pos_freqs
        q = self.q_in(positional_encoding(q_pos, q_nrm, n_freqs=nf))
        kv = self.kv_in(positional_encoding(kv_pos, kv_nrm, extra=kv_mask, n_freqs=nf))
        h = self.cross(q, kv)
        for blk in self.selfs:
            h = blk(h)
        return self.norm(h)
