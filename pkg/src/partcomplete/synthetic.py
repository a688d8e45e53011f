"""Procedural part assemblies with known complete parts and controllable
occlusion.

Parts are watertight primitives that deliberately interpenetrate, so the
visibility cull removes the buried regions and the retained primitives act
as exact ground-truth complete parts.  The occlusion target is interpreted
as the mean hidden-area fraction over the attached (non-anchor) parts; the
anchor (part 0, the dominant body) is mostly visible by construction."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .config import derive_seed
from .curation.pairs import PartObject, make_whole_part_pairs
from .curation.visibility import visible_face_ids
from .geometry import TriMesh, merge_meshes, normalize_to_unit
from .primitives import box_mesh, cone_mesh, cylinder_mesh, icosphere

# Tessellation density for generated primitives: visibility culling works at
# face granularity, so faces must be small relative to typical burial depths.
_TARGET_EDGE = 0.035


def _segs(extent) -> np.ndarray:
    ext = np.atleast_1d(np.asarray(extent, dtype=np.float64))
    return np.clip(np.ceil(ext / _TARGET_EDGE).astype(int), 1, 40)


def _box(center, size) -> TriMesh:
    return box_mesh(center, size, segments=_segs(size))


def _cyl(radius, height, center, segments=24) -> TriMesh:
    return cylinder_mesh(radius, height, center, segments=segments,
                         rings=int(_segs(height)[0]))


def _cone(rb, rt, height, center, segments=24) -> TriMesh:
    return cone_mesh(rb, rt, height, center, segments=segments,
                     rings=int(_segs(height)[0]))

FAMILIES = ("table", "chair", "lamp", "stacked")

MAX_OCCLUSION = 0.45


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class AssemblySpec:
    family: str
    seed: int
    occlusion: float = 0.15

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}")
        if not (0.0 <= self.occlusion < MAX_OCCLUSION):
            raise SpecError(
                f"occlusion target {self.occlusion} infeasible (need [0, {MAX_OCCLUSION}))"
            )


def _leg_depth(a: float, h: float, occl: float, cap_extra: float) -> float:
    """Embed depth of a square post (side a, height h) hitting a hidden-area
    fraction ``occl``: hidden = 4*a*d + cap_extra, total = 4*a*h + 2*a*a."""
    total = 4 * a * h + 2 * a * a
    d = (occl * total - cap_extra) / (4 * a)
    return d


def _table_parts(rng: np.random.Generator, occl: float) -> list[TriMesh]:
    w = rng.uniform(1.2, 1.8)
    dep = rng.uniform(0.9, 1.4)
    th = rng.uniform(0.10, 0.16)
    h_leg = rng.uniform(0.6, 0.9)
    a = rng.uniform(0.08, 0.13)
    top = _box((0, 0, h_leg + th / 2), (w, dep, th))
    if occl == 0.0:
        d, drop = 0.0, 0.02  # legs end just below the top: fully disjoint
    else:
        d = float(np.clip(_leg_depth(a, h_leg, occl, a * a), 0.01, 0.8 * th))
        drop = 0.0
    legs = [
        _box(
            (sx * (w / 2 - a), sy * (dep / 2 - a), (h_leg + d) / 2 - drop),
            (a, a, h_leg + d),
        )
        for sx in (-1, 1)
        for sy in (-1, 1)
    ]
    return [top] + legs


def _chair_parts(rng: np.random.Generator, occl: float) -> list[TriMesh]:
    w = rng.uniform(0.8, 1.1)
    dep = rng.uniform(0.8, 1.0)
    th = rng.uniform(0.09, 0.14)
    h_leg = rng.uniform(0.5, 0.7)
    a = rng.uniform(0.07, 0.11)
    seat = _box((0, 0, h_leg + th / 2), (w, dep, th))
    if occl == 0.0:
        d = 0.0
        gap = 0.02
    else:
        d = float(np.clip(_leg_depth(a, h_leg, occl, a * a), 0.01, 0.8 * th))
        gap = 0.0
    parts = [seat]
    for sx in (-1, 1):
        for sy in (-1, 1):
            parts.append(
                _box(
                    (sx * (w / 2 - a), sy * (dep / 2 - a), (h_leg + d) / 2 - gap),
                    (a, a, h_leg + d),
                )
            )
    bw, bt, bh = w, rng.uniform(0.07, 0.1), rng.uniform(0.5, 0.8)
    if occl == 0.0:
        bz = h_leg + th + bh / 2 + 0.02
        db = 0.0
    else:
        total = 2 * (bw + bt) * bh + 2 * bw * bt
        db = float(np.clip((occl * total - bw * bt) / (2 * (bw + bt)), 0.01, 0.8 * th))
        bz = h_leg + th + bh / 2 - db
    parts.append(_box((0, (dep - bt) / 2 - bt, bz), (bw, bt, bh)))
    return parts


def _lamp_parts(rng: np.random.Generator, occl: float) -> list[TriMesh]:
    rb = rng.uniform(0.3, 0.45)
    hb = rng.uniform(0.07, 0.11)
    rp = rng.uniform(0.035, 0.055)
    hp = rng.uniform(0.9, 1.3)
    rs_bot = rng.uniform(0.35, 0.5)
    rs_top = rng.uniform(0.15, 0.22)
    hs = rng.uniform(0.3, 0.42)
    base = _cyl(rb, hb, center=(0, 0, hb / 2), segments=28)
    if occl == 0.0:
        d1 = d2 = 0.0
        pole_z = hb + 0.02 + hp / 2
        shade_z = hb + 0.04 + hp + hs / 2
    else:
        # pole hidden area: 2*pi*rp*(d1+d2) + 2*pi*rp^2 caps; total 2*pi*rp*hp + 2*pi*rp^2
        want = occl * (hp + rp) - rp + 0.018  # half-ring quantization offset
        d1 = float(np.clip(want / 2, 0.01, 0.8 * hb))
        d2 = float(np.clip(want - d1, 0.01, 0.8 * hs))
        pole_z = hb - d1 + hp / 2
        shade_z = hb - d1 + hp - d2 + hs / 2
    # fine rings: burial depths are fractions of the pole, and the cull
    # quantizes hidden area to whole rings
    pole = cylinder_mesh(rp, hp, (0, 0, pole_z), segments=20, rings=max(1, int(np.ceil(hp / 0.018))))
    shade = _cone(rs_bot, rs_top, hs, center=(0, 0, shade_z), segments=28)
    return [base, pole, shade]


def _stacked_parts(rng: np.random.Generator, occl: float) -> list[TriMesh]:
    n = int(rng.integers(3, 7))
    parts = []
    z = 0.0
    prev_h = 0.0
    for i in range(n):
        kind = rng.choice(["box", "sphere", "cylinder"])
        s = rng.uniform(0.35, 0.75) * (1.0 - 0.08 * i)
        depth = s * rng.uniform(0.8, 1.2)
        squish = rng.uniform(0.6, 1.0)
        if i == 0:
            cx, cy = 0.0, 0.0
            h = s if kind == "sphere" else s * squish
            cz = h / 2
        else:
            jitter = rng.uniform(-0.06, 0.06, size=2)
            cx, cy = float(jitter[0]), float(jitter[1])
            h = s if kind == "sphere" else s * squish
            if occl == 0.0:
                cz = z + 0.02 + h / 2
            else:
                overlap = float(np.clip(occl * h, 0.02, 0.4 * min(h, prev_h)))
                cz = z - overlap + h / 2
        if kind == "box":
            parts.append(_box((cx, cy, cz), (s, depth, h)))
        elif kind == "sphere":
            parts.append(icosphere(2, h / 2, (cx, cy, cz)))
        else:
            parts.append(_cyl(s / 2.2, h, (cx, cy, cz), segments=24))
        z = cz + h / 2
        prev_h = h
    return parts


_GENERATORS = {
    "table": _table_parts,
    "chair": _chair_parts,
    "lamp": _lamp_parts,
    "stacked": _stacked_parts,
}


def occluded_part_ids(spec: "AssemblySpec", n_parts: int) -> list[int]:
    """Parts the generator deliberately buries (the occlusion target refers
    to these; e.g. the lamp shade sits on top and is never occluded)."""
    if spec.family == "lamp":
        return [1]  # the pole
    return list(range(1, n_parts))


def raw_assembly_parts(spec: AssemblySpec) -> list[TriMesh]:
    """Ground-truth primitive parts before any processing (deterministic)."""
    rng = np.random.default_rng(spec.seed)
    return _GENERATORS[spec.family](rng, spec.occlusion)


def gen_assembly(
    spec: AssemblySpec,
    udf_resolution: int = 96,
    n_views: int = 162,
    visibility_res: int = 256,
    backend=None,
) -> PartObject:
    """Build the PartObject: primitives are kept verbatim as complete parts
    (already watertight); the whole proxy runs the full cull+UDF pipeline."""
    parts = raw_assembly_parts(spec)
    return make_whole_part_pairs(
        f"{spec.family}-{spec.seed}",
        parts,
        category=spec.family,
        udf_resolution=udf_resolution,
        n_views=n_views,
        visibility_res=visibility_res,
        parts_watertight=True,
        backend=backend,
    )


def measure_occlusion(
    spec: AssemblySpec, n_views: int = 162, res: int = 256, backend=None
) -> float:
    """Mean hidden-area fraction over the deliberately occluded parts,
    measured with the visibility cull on the merged assembly."""
    parts = raw_assembly_parts(spec)
    merged, _ = normalize_to_unit(merge_meshes(parts))
    ids = visible_face_ids(merged, n_views=n_views, res=res, backend=backend)
    visible = np.zeros(merged.n_faces, dtype=bool)
    visible[ids] = True
    areas = merged.face_areas()
    labels = merged.face_labels
    fracs = []
    for pi in occluded_part_ids(spec, len(parts)):
        sel = labels == pi
        tot = float(areas[sel].sum())
        vis = float(areas[sel & visible].sum())
        fracs.append(1.0 - vis / tot if tot > 0 else 0.0)
    return float(np.mean(fracs)) if fracs else 0.0


# ---------------------------------------------------------------------------
# dataset manifests


def _item_hash(family: str, seed: int) -> int:
    h = hashlib.blake2b(f"{family}:{seed}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "little")


def _largest_remainder(quota: float, weights: list[int]) -> list[int]:
    """Integer allocation of round(quota * sum(weights)) over groups."""
    total = int(round(quota * sum(weights)))
    raw = [quota * w for w in weights]
    base = [int(np.floor(x)) for x in raw]
    rem = total - sum(base)
    order = np.argsort([b - r for b, r in zip(base, raw)])  # largest remainder first
    for i in range(rem):
        base[order[i]] += 1
    return base


def gen_dataset(
    n: int,
    families: tuple[str, ...] = FAMILIES,
    seed: int = 0,
    occlusion: float = 0.15,
) -> list[dict]:
    """Manifest of n assembly specs with an exact 80/10/10 split, stratified
    by family and ordered within each family by item hash so membership is
    stable under regeneration."""
    if n < 1:
        raise SpecError("n must be >= 1")
    items = []
    for i in range(n):
        family = families[i % len(families)]
        item_seed = derive_seed(seed, f"assembly:{i}")
        items.append(
            {
                "id": f"{family}-{item_seed:016x}",
                "family": family,
                "seed": item_seed,
                "occlusion": occlusion,
            }
        )
    by_family: dict[str, list[dict]] = {}
    for it in items:
        by_family.setdefault(it["family"], []).append(it)
    fams = sorted(by_family)
    sizes = [len(by_family[f]) for f in fams]
    n_train = _largest_remainder(0.8, sizes)
    n_val = _largest_remainder(0.1, sizes)
    for f, ntr, nva in zip(fams, n_train, n_val):
        group = sorted(by_family[f], key=lambda it: _item_hash(it["family"], it["seed"]))
        ntr = min(ntr, len(group))
        nva = min(nva, len(group) - ntr)
        for rank, it in enumerate(group):
            if rank < ntr:
                it["split"] = "train"
            elif rank < ntr + nva:
                it["split"] = "val"
            else:
                it["split"] = "test"
    return items
