"""Input featurization: sinusoidal point embeddings and timestep embeddings."""

from __future__ import annotations

import math

import torch


def posenc_width(n_freqs: int, with_normals: bool = True, with_extra: bool = False) -> int:
    """Feature width: raw xyz + optional normal + optional mask channel +
    sin/cos of xyz at n_freqs octaves."""
    return 3 + (3 if with_normals else 0) + (1 if with_extra else 0) + 3 * 2 * n_freqs


def positional_encoding(
    positions: torch.Tensor,
    normals: torch.Tensor | None = None,
    extra: torch.Tensor | None = None,
    n_freqs: int = 6,
) -> torch.Tensor:
    """Per-point features: [xyz, (normal), (extra), sin(2^k pi xyz), cos(...)].

    Frequencies are pi * 2^k, k = 0..n_freqs-1, tuned for [-1, 1] inputs."""
    if n_freqs < 1:
        raise ValueError("n_freqs must be >= 1")
    parts = [positions]
    if normals is not None:
        parts.append(normals)
    if extra is not None:
        if extra.dim() == positions.dim() - 1:
            extra = extra.unsqueeze(-1)
        parts.append(extra)
    freqs = torch.pi * (2.0 ** torch.arange(n_freqs, dtype=positions.dtype, device=positions.device))
    ang = positions.unsqueeze(-1) * freqs  # (..., 3, F)
    ang = ang.flatten(-2)                  # (..., 3F)
    parts.append(torch.sin(ang))
    parts.append(torch.cos(ang))
    return torch.cat(parts, dim=-1)


def timestep_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal embedding of the integer timestep index floor(1000 t),
    clamped to [0, 999] (t arrives as continuous time in [0, 1])."""
    if dim % 2 != 0:
        raise ValueError("embedding dim must be even")
    idx = torch.clamp(torch.floor(1000.0 * t), 0.0, 999.0)
    half = dim // 2
    freqs = torch.exp(
        -math.log(10_000.0)
        * torch.arange(half, dtype=t.dtype, device=t.device)
        / half
    )
    ang = idx.unsqueeze(-1) * freqs
    return torch.cat([torch.sin(ang), torch.cos(ang)], dim=-1)
