"""The full learnable bundle: shape VAE, both conditioning encoders, the
velocity network, and the learned null-condition tokens for CFG."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from ..config import RunConfig
from ..geometry import PointCloud
from ..sampling import fps
from .conditioning import ConditionEncoder
from .vae import ShapeVAE
from .velocity import VelocityNet


class PartCompletionModel(nn.Module):
    def __init__(self, cfg: RunConfig):
        super().__init__()
        self.run_cfg = cfg
        m = cfg.model
        self.vae = ShapeVAE(m)
        self.context_encoder = ConditionEncoder(m, kv_has_mask=True)
        self.local_encoder = ConditionEncoder(m, kv_has_mask=False)
        self.velocity = VelocityNet(m)
        # learned null tokens replace (c_ctx, c_loc) jointly for CFG dropout
        self.null_context = nn.Parameter(torch.zeros(cfg.n_part_query, m.cond_dim))
        self.null_local = nn.Parameter(torch.zeros(cfg.n_part_query, m.cond_dim))

    @property
    def latent_shape(self) -> tuple[int, int]:
        return (self.run_cfg.model.latent_tokens, self.run_cfg.model.latent_dim)

    def encode_cloud(
        self,
        cloud: PointCloud,
        m_tokens: int | None = None,
        seed: int = 0,
        sample: bool = True,
        generator: torch.Generator | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """NumPy-side convenience: FPS the cloud, run the encoder, and
        reparameterize.  Returns (z, mean, logvar) with batch dim 1."""
        m_tokens = m_tokens or self.run_cfg.model.latent_tokens
        if m_tokens > len(cloud):
            raise ValueError(f"m_tokens={m_tokens} exceeds point count {len(cloud)}")
        idx = fps(cloud, m_tokens, seed=seed)
        dtype = next(self.parameters()).dtype
        pos = torch.from_numpy(np.array(cloud.positions)).to(dtype)[None]
        nrm = torch.from_numpy(np.array(cloud.normals)).to(dtype)[None]
        fidx = torch.from_numpy(np.array(idx))[None]
        mean, logvar = self.vae.encode(pos, nrm, fidx)
        z = self.vae.reparameterize(mean, logvar, generator=generator, sample=sample)
        return z, mean, logvar

    def decode_logits(self, z: torch.Tensor, points: np.ndarray, chunk: int = 16_384) -> np.ndarray:
        """Occupancy logits at (N, 3) numpy points for a single latent set
        (batch dim 1), chunked to bound memory."""
        dtype = next(self.parameters()).dtype
        lat = self.vae.process_latents(z)
        out = []
        with torch.no_grad():
            for lo in range(0, len(points), chunk):
                q = torch.from_numpy(np.array(points[lo : lo + chunk])).to(dtype)[None]
                out.append(self.vae.decode_processed(lat, q)[0])
        return torch.cat(out).double().numpy()
