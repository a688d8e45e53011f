"""Whole-part pair generation: merge, cull, watertight, and mask assignment.

The output bundle (PartObject) is the training/eval unit: a closed whole
proxy whose faces carry part ids, plus the complete part meshes in the same
normalized frame."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..geometry import (
    GeometryError,
    NormTransform,
    TriMesh,
    bounding_box,
    merge_meshes,
    normalize_to_unit,
)
from ..fields import FieldError, watertight_proxy
from ..meshio import load_mesh, write_mesh
from .visibility import visibility_cull


class PipelineError(RuntimeError):
    """A pair-generation stage produced empty or invalid geometry."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class PartObject:
    """A processed whole shape with per-face part masks and complete parts."""

    object_id: str
    whole: TriMesh                  # watertight proxy, face_labels = masks
    parts: tuple[TriMesh, ...]      # complete part meshes, same frame
    category: str = ""
    norm: NormTransform = field(default_factory=NormTransform.identity)

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if len(self.parts) < 1:
            raise GeometryError("PartObject needs at least one part")
        lab = self.whole.face_labels
        if lab is None:
            raise GeometryError("whole mesh must carry per-face part labels")
        n = len(self.parts)
        if lab.min() < 0 or lab.max() >= n:
            raise GeometryError("face label outside part range")
        if len(np.unique(lab)) != n:
            raise GeometryError("part ids must form a contiguous, fully used range")

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    def mask_faces(self, part_id: int) -> np.ndarray:
        return self.whole.face_labels == part_id

    def patch_mesh(self, part_id: int) -> TriMesh:
        """Visible surface patch of one part (submesh of the whole proxy)."""
        return self.whole.submesh(self.mask_faces(part_id))


def assign_part_masks(whole: TriMesh, parts: list[TriMesh], backend=None) -> np.ndarray:
    """Label each whole face with the part whose surface is nearest to the
    face centroid; exact distance ties break to the lower part index."""
    if whole.n_faces == 0 or not parts:
        raise GeometryError("assign_part_masks needs nonempty inputs")
    centroids = whole.face_centroids()
    dists = np.stack(
        [
            kernels.MeshQuery(p.vertices, p.faces, backend=backend).distance(centroids)
            for p in parts
        ]
    )
    return np.argmin(dists, axis=0).astype(np.int64)


def merge_floaters(
    parts: list[TriMesh], floater_ids: list[int], backend=None
) -> list[TriMesh]:
    """Merge negligible floating parts into their nearest substantial part."""
    if not floater_ids:
        return list(parts)
    hosts = [i for i in range(len(parts)) if i not in set(floater_ids)]
    if not hosts:
        warnings.warn("all parts flagged as floaters; keeping object unchanged", stacklevel=2)
        return list(parts)
    merged = {i: parts[i] for i in hosts}
    for fi in floater_ids:
        d = [
            kernels.MeshQuery(parts[h].vertices, parts[h].faces, backend=backend)
            .distance(parts[fi].vertices)
            .min()
            for h in hosts
        ]
        host = hosts[int(np.argmin(d))]
        combo = merge_meshes([merged[host], parts[fi]])
        merged[host] = TriMesh(combo.vertices, combo.faces)
    return [merged[h] for h in hosts]


def make_whole_part_pairs(
    object_id: str,
    raw_parts: list[TriMesh],
    category: str = "",
    udf_resolution: int = 128,
    tau_cells: float = 1.5,
    n_views: int = 162,
    visibility_res: int = 256,
    parts_watertight: bool = False,
    backend=None,
) -> PartObject:
    """Run the pair pipeline: merge -> visibility cull -> UDF watertight
    whole proxy; per part a watertight complete proxy (skipped when inputs
    are already closed); then nearest-face mask assignment.

    Parts that end up with no visible face on the whole proxy are dropped
    and the remaining ids are relabeled contiguously."""
    if not raw_parts:
        raise PipelineError("merge", "no input parts")
    merged = merge_meshes(raw_parts)
    normalized, t = normalize_to_unit(merged)
    norm_parts = [p.transformed(t) for p in raw_parts]

    culled = visibility_cull(normalized, n_views=n_views, res=visibility_res, backend=backend)
    if culled.n_faces == 0:
        raise PipelineError("visibility", "no visible faces")

    try:
        whole = watertight_proxy(culled, udf_resolution, tau_cells, backend=backend)
    except (FieldError, GeometryError) as exc:
        raise PipelineError("whole_proxy", str(exc)) from exc

    complete = []
    for i, p in enumerate(norm_parts):
        if parts_watertight:
            complete.append(p)
            continue
        try:
            complete.append(watertight_proxy(p, udf_resolution, tau_cells, backend=backend))
        except (FieldError, GeometryError) as exc:
            raise PipelineError(f"part_proxy[{i}]", str(exc)) from exc

    labels = assign_part_masks(whole, complete, backend=backend)
    used = np.unique(labels)
    if len(used) < len(complete):
        remap = np.full(len(complete), -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        labels = remap[labels]
        complete = [complete[i] for i in used]
        warnings.warn(
            f"{object_id}: dropped {len(remap) - len(used)} fully occluded part(s)",
            stacklevel=2,
        )
    return PartObject(object_id, whole.with_labels(labels), tuple(complete), category, t)


# ---------------------------------------------------------------------------
# bundle serialization (directory per object)


def save_part_object(dirpath, obj: PartObject) -> None:
    from pathlib import Path

    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    write_mesh(d / "whole.ply", obj.whole)
    for k, p in enumerate(obj.parts):
        write_mesh(d / f"part_{k}.ply", p)
    meta = {
        "object_id": obj.object_id,
        "category": obj.category,
        "n_parts": obj.n_parts,
        "face_labels": [int(x) for x in obj.whole.face_labels],
        "norm": {
            "scale": obj.norm.scale,
            "translation": [float(x) for x in obj.norm.translation],
        },
    }
    (d / "masks.json").write_text(json.dumps(meta, sort_keys=True, indent=0))


def load_part_object(dirpath) -> PartObject:
    from pathlib import Path

    d = Path(dirpath)
    meta = json.loads((d / "masks.json").read_text())
    whole = load_mesh(d / "whole.ply")
    labels = np.asarray(meta["face_labels"], dtype=np.int64)
    if len(labels) != whole.n_faces:
        raise GeometryError(f"{d}: face label count mismatch")
    parts = tuple(load_mesh(d / f"part_{k}.ply") for k in range(meta["n_parts"]))
    norm = NormTransform(meta["norm"]["scale"], np.asarray(meta["norm"]["translation"]))
    return PartObject(
        meta["object_id"], whole.with_labels(labels), parts, meta.get("category", ""), norm
    )
