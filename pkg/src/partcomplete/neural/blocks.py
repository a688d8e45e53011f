"""Transformer building blocks: multi-head attention, pre-LN self/cross
blocks, and feed-forward layers.  Hand-rolled (no fused kernels) so the same
code runs the float64 gradient checks and float32 training."""

from __future__ import annotations

import math

import torch
from torch import nn


def attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    """Scaled dot-product attention over the last two dims (.., T, D)."""
    scale = 1.0 / math.sqrt(q.shape[-1])
    w = torch.softmax(q @ k.transpose(-1, -2) * scale, dim=-1)
    return w @ v


class MultiheadAttention(nn.Module):
    def __init__(self, dim: int, kv_dim: int, heads: int):
        super().__init__()
        if dim % heads != 0:
            raise ValueError("dim must be divisible by heads")
        self.heads = heads
        self.q_proj = nn.Linear(dim, dim)
        self.k_proj = nn.Linear(kv_dim, dim)
        self.v_proj = nn.Linear(kv_dim, dim)
        self.out_proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        b, nq, d = x.shape
        h = self.heads
        q = self.q_proj(x).view(b, nq, h, d // h).transpose(1, 2)
        k = self.k_proj(y).view(b, y.shape[1], h, d // h).transpose(1, 2)
        v = self.v_proj(y).view(b, y.shape[1], h, d // h).transpose(1, 2)
        out = attention(q, k, v).transpose(1, 2).reshape(b, nq, d)
        return self.out_proj(out)


class FeedForward(nn.Module):
    def __init__(self, dim: int, mult: int = 4):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(dim, dim * mult), nn.GELU(), nn.Linear(dim * mult, dim)
        )

    def forward(self, x):
        return self.net(x)


class CrossAttentionBlock(nn.Module):
    """Pre-LN residual cross-attention followed by a feed-forward layer."""

    def __init__(self, dim: int, kv_dim: int, heads: int):
        super().__init__()
        self.norm_q = nn.LayerNorm(dim)
        self.norm_kv = nn.LayerNorm(kv_dim)
        self.attn = MultiheadAttention(dim, kv_dim, heads)
        self.norm_ff = nn.LayerNorm(dim)
        self.ff = FeedForward(dim)

    def forward(self, x, y):
        x = x + self.attn(self.norm_q(x), self.norm_kv(y))
        return x + self.ff(self.norm_ff(x))


class SelfAttentionBlock(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm = nn.LayerNorm(dim)
        self.attn = MultiheadAttention(dim, dim, heads)
        self.norm_ff = nn.LayerNorm(dim)
        self.ff = FeedForward(dim)

    def forward(self, x):
        h = self.norm(x)
        x = x + self.attn(h, h)
        return x + self.ff(self.norm_ff(x))


def cross_attention(
    queries: torch.Tensor, keys_values: torch.Tensor, module: MultiheadAttention
) -> torch.Tensor:
    """Functional form of a single attention application (no residual)."""
    return module(queries, keys_values)
