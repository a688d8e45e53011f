"""Training-sample preparation from whole-part bundles.

Every sample is regenerated from a labeled seed each step (fresh surface
points and occupancy queries), so the loops stay deterministic for a given
run seed while still seeing new samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import RunConfig, derive_seed
from ..curation.pairs import PartObject
from ..geometry import AABB, TriMesh, bounding_box, points_bounding_box, unit_box_transform
from ..kernels import MeshQuery
from ..sampling import fps, part_in_local_frame, sample_surface

MIN_PATCH_FACES = 3


@dataclass(frozen=True)
class ConditionArrays:
    """NumPy inputs for both conditioning encoders, one part prompt."""

    whole_pos: np.ndarray     # (Nw, 3)
    whole_nrm: np.ndarray
    whole_mask: np.ndarray    # (Nw,) binary
    q_pos: np.ndarray         # (Nq, 3) part FPS queries, whole frame
    q_nrm: np.ndarray
    q_pos_local: np.ndarray   # same queries in the part's unit frame
    q_nrm_local: np.ndarray
    s_pos_local: np.ndarray   # (Ns, 3) dense patch samples, local frame
    s_nrm_local: np.ndarray
    patch_box: AABB           # patch bounding box, whole frame


def condition_arrays(
    whole: TriMesh,
    face_mask: np.ndarray,
    cfg: RunConfig,
    seed: int,
    patch: TriMesh | None = None,
) -> ConditionArrays:
    """Build encoder inputs for one part prompt: a binary mask over the
    whole mesh's faces marks the visible patch."""
    face_mask = np.asarray(face_mask, dtype=bool)
    if face_mask.shape != (whole.n_faces,):
        raise ValueError("face_mask length must match the whole face count")
    if not face_mask.any():
        raise ValueError("empty part mask")
    whole_cloud, fidx = sample_surface(
        whole, cfg.n_whole_points, derive_seed(seed, "whole"), return_face_idx=True
    )
    mask = face_mask[fidx].astype(np.float64)
    if patch is None:
        patch = whole.submesh(face_mask)
    if patch.n_faces < MIN_PATCH_FACES:
        raise ValueError("part patch has too few visible faces")
    s_cloud = sample_surface(patch, cfg.n_part_surface, derive_seed(seed, "patch"))
    s0 = fps(s_cloud, cfg.n_part_query, seed=0)
    local_cloud, _ = part_in_local_frame(s_cloud)
    return ConditionArrays(
        whole_pos=whole_cloud.positions,
        whole_nrm=whole_cloud.normals,
        whole_mask=mask,
        q_pos=s_cloud.positions[s0],
        q_nrm=s_cloud.normals[s0],
        q_pos_local=local_cloud.positions[s0],
        q_nrm_local=local_cloud.normals[s0],
        s_pos_local=local_cloud.positions,
        s_nrm_local=local_cloud.normals,
        patch_box=points_bounding_box(s_cloud.positions),
    )


@dataclass(frozen=True)
class OccupancyBatch:
    """One VAE supervision sample: surface cloud + labeled occupancy queries."""

    pos: np.ndarray       # (K, 3)
    nrm: np.ndarray
    fps_idx: np.ndarray   # (M,)
    queries: np.ndarray   # (Q, 3)
    occ: np.ndarray       # (Q,) {0,1}


def occupancy_sample(
    mesh: TriMesh,
    mq: MeshQuery,
    cfg: RunConfig,
    seed: int,
    m_tokens: int | None = None,
) -> OccupancyBatch:
    """Cloud + query mix: half near-surface (two noise scales), half uniform
    over the padded part box; labels by exact ray parity."""
    cloud = sample_surface(mesh, cfg.n_complete_points, derive_seed(seed, "cloud"))
    m = m_tokens or cfg.model.latent_tokens
    idx = fps(cloud, m, seed=0)
    rng = np.random.default_rng(derive_seed(seed, "queries"))
    nq = cfg.n_occ_queries
    n_near = nq // 2
    base = cloud.positions[rng.integers(0, len(cloud), size=n_near)]
    sigma = np.where(rng.random((n_near, 1)) < 0.5, 0.015, 0.06)
    near = base + rng.normal(size=(n_near, 3)) * sigma
    box = bounding_box(mesh)
    pad = 0.15 * float(box.extent.max())
    lo = box.min_corner - pad
    hi = box.max_corner + pad
    uniform = rng.uniform(lo, hi, size=(nq - n_near, 3))
    queries = np.concatenate([near, uniform])
    occ = mq.inside(queries).astype(np.float64)
    return OccupancyBatch(cloud.positions, cloud.normals, idx, queries, occ)


class CompletionDataset:
    """Indexable (object, part) prompts over a list of bundles, with cached
    patch meshes and per-part inside-test accelerators."""

    def __init__(self, objects: list[PartObject], cfg: RunConfig):
        self.objects = list(objects)
        self.cfg = cfg
        self.items: list[tuple[int, int]] = []
        self._patches: dict[tuple[int, int], TriMesh] = {}
        for oi, obj in enumerate(self.objects):
            for pid in range(obj.n_parts):
                patch = obj.patch_mesh(pid)
                if patch.n_faces >= MIN_PATCH_FACES and patch.area() > 1e-10:
                    self.items.append((oi, pid))
                    self._patches[(oi, pid)] = patch
        self._queries: dict[int, MeshQuery] = {}

    def __len__(self) -> int:
        return len(self.items)

    def part_mesh(self, item: int) -> TriMesh:
        oi, pid = self.items[item]
        return self.objects[oi].parts[pid]

    def part_query(self, item: int) -> MeshQuery:
        oi, pid = self.items[item]
        key = id(self.objects[oi].parts[pid])
        if key not in self._queries:
            p = self.objects[oi].parts[pid]
            self._queries[key] = MeshQuery(p.vertices, p.faces)
        return self._queries[key]

    def conditions(self, item: int, seed: int) -> ConditionArrays:
        oi, pid = self.items[item]
        obj = self.objects[oi]
        return condition_arrays(
            obj.whole, obj.mask_faces(pid), self.cfg, seed, patch=self._patches[(oi, pid)]
        )

    def occupancy(self, item: int, seed: int) -> OccupancyBatch:
        return occupancy_sample(self.part_mesh(item), self.part_query(item), self.cfg, seed)


def vae_training_meshes(objects: list[PartObject], include_whole: bool = False) -> list[TriMesh]:
    """Complete parts in the whole frame plus their unit-frame variants (the
    high-token re-encode path sees unit-frame parts); optionally the whole
    proxies too."""
    meshes: list[TriMesh] = []
    for obj in objects:
        for p in obj.parts:
            meshes.append(p)
            t = unit_box_transform(bounding_box(p))
            meshes.append(p.transformed(t))
        if include_whole:
            meshes.append(TriMesh(obj.whole.vertices, obj.whole.faces))
    return meshes
