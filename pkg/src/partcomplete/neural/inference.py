"""End-to-end part completion and the high-token re-encode path.

``complete_part`` runs the full chain: sample the whole and patch, encode
both condition streams, integrate the flow from noise, decode occupancy, and
extract the mesh locally around the scaled patch box.  Everything is pure
given (model, inputs, seed)."""

from __future__ import annotations

import numpy as np
import torch

from ..config import RunConfig, derive_seed
from ..fields import local_marching_cubes
from ..geometry import (
    GeometryError,
    NormTransform,
    TriMesh,
    bounding_box,
    unit_box_transform,
)
from ..sampling import sample_surface
from .data import condition_arrays
from .flow import sample_latents
from .model import PartCompletionModel


def _maybe_normalize(whole: TriMesh) -> tuple[TriMesh, NormTransform]:
    """Bring out-of-frame inputs into the training frame ([-1,1] box).
    Stored bundles are already normalized and pass through unchanged."""
    box = bounding_box(whole)
    if float(np.abs(np.concatenate([box.min_corner, box.max_corner])).max()) > 1.3:
        t = unit_box_transform(box)
        return whole.transformed(t), t
    return whole, NormTransform.identity()


def encode_conditions(
    model: PartCompletionModel, whole: TriMesh, face_mask: np.ndarray, cfg: RunConfig, seed: int
) -> tuple[torch.Tensor, torch.Tensor, "ConditionArrays"]:
    from .data import ConditionArrays  # noqa: F401 (type only)

    arrays = condition_arrays(whole, face_mask, cfg, seed)
    dtype = next(model.parameters()).dtype

    def t(a):
        return torch.from_numpy(np.array(a, dtype=np.float64)).to(dtype)[None]

    with torch.no_grad():
        c_ctx = model.context_encoder(
            t(arrays.q_pos), t(arrays.q_nrm),
            t(arrays.whole_pos), t(arrays.whole_nrm), t(arrays.whole_mask),
        )
        c_loc = model.local_encoder(
            t(arrays.q_pos_local), t(arrays.q_nrm_local),
            t(arrays.s_pos_local), t(arrays.s_nrm_local),
        )
    return c_ctx, c_loc, arrays


def complete_part(
    model: PartCompletionModel,
    whole: TriMesh,
    face_mask: np.ndarray,
    cfg: RunConfig,
    seed: int = 0,
    guidance: float | None = None,
    n_steps: int | None = None,
) -> TriMesh:
    """Generate the complete part for a visible-surface mask, returned in the
    input mesh's coordinates.

    Raises GeometryError for an empty mask and FieldError when no isosurface
    exists in the extraction box (callers count that as a failed attempt)."""
    face_mask = np.asarray(face_mask, dtype=bool)
    if face_mask.shape != (whole.n_faces,) or not face_mask.any():
        raise GeometryError("part mask is empty or mismatched")
    guidance = cfg.guidance_scale if guidance is None else guidance
    n_steps = cfg.n_steps if n_steps is None else n_steps

    normed, t_norm = _maybe_normalize(whole)
    c_ctx, c_loc, arrays = encode_conditions(
        model, normed, face_mask, cfg, derive_seed(seed, "conditions")
    )
    dtype = next(model.parameters()).dtype
    gen = torch.Generator().manual_seed(derive_seed(seed, "latents"))
    with torch.no_grad():
        z = sample_latents(
            model.velocity,
            c_ctx,
            c_loc,
            model.null_context.to(dtype),
            model.null_local.to(dtype),
            (1, *model.latent_shape),
            n_steps=n_steps,
            guidance=guidance,
            generator=gen,
            dtype=dtype,
        )

    def occupancy(points: np.ndarray) -> np.ndarray:
        return model.decode_logits(z, points)

    mesh = local_marching_cubes(
        occupancy, arrays.patch_box, scale=cfg.box_scale, resolution=cfg.local_mc_resolution
    )
    return mesh.transformed(t_norm.inverse())


def complete_object(
    model: PartCompletionModel, obj, cfg: RunConfig, seed: int = 0, guidance: float | None = None
) -> list[TriMesh | None]:
    """Complete every part of a bundle; failed extractions yield None."""
    from ..fields import FieldError

    out = []
    for pid in range(obj.n_parts):
        try:
            out.append(
                complete_part(
                    model,
                    obj.whole,
                    obj.mask_faces(pid),
                    cfg,
                    seed=derive_seed(seed, f"{obj.object_id}:part:{pid}"),
                    guidance=guidance,
                )
            )
        except (FieldError, GeometryError, ValueError):
            out.append(None)
    return out


def reencode_part_highres(
    model: PartCompletionModel,
    part: TriMesh,
    m_tokens: int | None = None,
    cfg: RunConfig | None = None,
    seed: int = 0,
) -> TriMesh:
    """Re-encode an isolated part with an arbitrary token budget and decode
    it back to a mesh (the geometry super-resolution path: a part encoded
    with the whole-shape budget keeps far more detail)."""
    cfg = cfg or model.run_cfg
    m_tokens = m_tokens or cfg.model.latent_tokens
    t = unit_box_transform(bounding_box(part))
    local = part.transformed(t)
    cloud = sample_surface(local, cfg.n_complete_points, derive_seed(seed, "reencode"))
    with torch.no_grad():
        z, _, _ = model.encode_cloud(cloud, m_tokens=m_tokens, seed=0, sample=False)

    def occupancy(points: np.ndarray) -> np.ndarray:
        return model.decode_logits(z, points)

    mesh = local_marching_cubes(
        occupancy,
        bounding_box(local),
        scale=cfg.box_scale,
        resolution=cfg.local_mc_resolution,
    )
    return mesh.transformed(t.inverse())


def vae_reconstruct(
    model: PartCompletionModel, part: TriMesh, cfg: RunConfig | None = None, seed: int = 0
) -> TriMesh:
    """Plain VAE reconstruction = re-encode at the default token budget."""
    return reencode_part_highres(model, part, m_tokens=None, cfg=cfg, seed=seed)
