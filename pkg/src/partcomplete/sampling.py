"""Surface point sampling, farthest point sampling, and the masked /
local-frame point sets that feed the conditioning encoders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import (
    GeometryError,
    NormTransform,
    PointCloud,
    TriMesh,
    points_bounding_box,
    unit_box_transform,
)


@dataclass(frozen=True)
class FeaturedPoints:
    """Point set with normals and an optional binary extra channel (the
    part-highlight mask concatenated onto the whole-shape points)."""

    positions: np.ndarray          # (N, 3)
    normals: np.ndarray            # (N, 3)
    extra: np.ndarray | None = None  # (N,) in {0, 1}

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=np.float64)
        n = np.asarray(self.normals, dtype=np.float64)
        if p.shape != n.shape or p.ndim != 2 or p.shape[1] != 3:
            raise GeometryError("positions/normals must both be (N, 3)")
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "normals", n)
        if self.extra is not None:
            e = np.asarray(self.extra, dtype=np.float64).reshape(-1)
            if e.shape[0] != p.shape[0]:
                raise GeometryError("extra channel length mismatch")
            if not np.isin(e, (0.0, 1.0)).all():
                raise GeometryError("extra channel must be binary")
            object.__setattr__(self, "extra", e)

    def __len__(self) -> int:
        return len(self.positions)


def _area_cdf(areas: np.ndarray, total: float) -> np.ndarray:
    cdf = np.cumsum(areas / total)
    cdf[-1] = 1.0
    return cdf


def sample_surface(
    mesh: TriMesh, n: int, seed: int, return_face_idx: bool = False
):
    """Area-weighted uniform surface samples with interpolated vertex
    normals; deterministic given the seed.

    With ``return_face_idx`` the source face index of every sample is also
    returned (used to transfer per-face part labels onto points)."""
    if n < 1:
        raise GeometryError("need at least one sample")
    areas = mesh.face_areas()
    total = float(areas.sum())
    if total <= 0.0:
        raise GeometryError("cannot sample a zero-area mesh")
    rng = np.random.default_rng(seed)
    cdf = mesh._memo("area_cdf", lambda: _area_cdf(areas, total))
    face_idx = np.searchsorted(cdf, rng.random(n), side="right")
    face_idx = np.minimum(face_idx, mesh.n_faces - 1)

    tri = mesh.vertices[mesh.faces[face_idx]]
    r1 = rng.random(n)
    r2 = rng.random(n)
    u = np.sqrt(r1)
    w0 = 1.0 - u
    w1 = u * (1.0 - r2)
    w2 = u * r2
    pos = w0[:, None] * tri[:, 0] + w1[:, None] * tri[:, 1] + w2[:, None] * tri[:, 2]

    vn = mesh.vertex_normals()[mesh.faces[face_idx]]
    nrm = w0[:, None] * vn[:, 0] + w1[:, None] * vn[:, 1] + w2[:, None] * vn[:, 2]
    ln = np.linalg.norm(nrm, axis=1, keepdims=True)
    flat = mesh.face_normals()[face_idx]
    nrm = np.where(ln > 1e-12, nrm / np.where(ln > 0, ln, 1.0), flat)
    # pathological cancellation: fall back to +z
    ln2 = np.linalg.norm(nrm, axis=1, keepdims=True)
    nrm = np.where(ln2 > 1e-12, nrm / np.where(ln2 > 0, ln2, 1.0), (0.0, 0.0, 1.0))

    cloud = PointCloud(pos, nrm)
    if return_face_idx:
        return cloud, face_idx
    return cloud


def fps(points: PointCloud | np.ndarray, m: int, seed: int, backend=None) -> np.ndarray:
    """Greedy farthest point subset indices.

    The first index is the point nearest the centroid when seed == 0 (a
    canonical start), otherwise a seeded uniform choice; each later index
    maximizes the minimum distance to the already-selected set, ties going
    to the lowest index."""
    pos = np.asarray(getattr(points, "positions", points), dtype=np.float64)
    n = len(pos)
    if m > n:
        raise GeometryError(f"cannot select {m} of {n} points")
    if m < 1:
        raise GeometryError("m must be >= 1")
    if seed == 0:
        centroid = pos.mean(axis=0)
        start = int(np.argmin(((pos - centroid) ** 2).sum(axis=1)))
    else:
        start = int(np.random.default_rng(seed).integers(0, n))
    return kernels.fps_core(pos, m, start, backend=backend)


def build_masked_whole(whole_points: PointCloud, mask: np.ndarray) -> FeaturedPoints:
    """Attach a per-point binary highlight mask as the extra channel."""
    m = np.asarray(mask).reshape(-1)
    if len(m) != len(whole_points):
        raise GeometryError("mask length must match point count")
    return FeaturedPoints(
        whole_points.positions, whole_points.normals, m.astype(np.float64)
    )


def part_in_local_frame(part_points: PointCloud) -> tuple[PointCloud, NormTransform]:
    """Renormalize a part's points to their own [-1, 1] box; the transform
    maps whole-frame coordinates to the local frame."""
    box = points_bounding_box(part_points.positions)
    if float(box.extent.max()) <= 0.0:
        raise GeometryError("zero-extent part cannot be normalized")
    t = unit_box_transform(box)
    return part_points.transformed(t), t
