"""Corpus filtering rules: part count range, connected-component percentile
screening, and single-part volume dominance."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..geometry import AABB
from .render import BinaryImage, coverage_fraction

MESH_COUNT_MIN = 2
MESH_COUNT_MAX = 15
COMPONENT_PERCENTILE = 85.0
DOMINANCE_THRESHOLD = 0.90
FLOATER_REL_VOLUME = 1e-4

RULE_NONE = "none"
RULE_MESH_COUNT = "mesh_count"
RULE_COMPONENTS = "components"
RULE_DOMINANCE = "dominance"


@dataclass(frozen=True)
class CurationDecision:
    object_id: str
    verdict: bool  # True = pass
    failed_rule: str = RULE_NONE
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.verdict and self.failed_rule == RULE_NONE:
            raise ValueError("failing decision must name the failed rule")
        if self.verdict and self.failed_rule != RULE_NONE:
            raise ValueError("passing decision cannot name a failed rule")


def filter_mesh_count(
    object_id: str, n_parts: int, lo: int = MESH_COUNT_MIN, hi: int = MESH_COUNT_MAX
) -> CurationDecision:
    ok = lo <= n_parts <= hi
    return CurationDecision(
        object_id,
        ok,
        RULE_NONE if ok else RULE_MESH_COUNT,
        {"n_parts": n_parts, "lo": lo, "hi": hi},
    )


@dataclass(frozen=True)
class ComponentStats:
    object_id: str
    mean: float       # mean component count over all part x view renders
    top3_mean: float  # mean of the three largest counts


def component_stats(object_id: str, counts: list[int]) -> ComponentStats:
    c = np.asarray(counts, dtype=np.float64)
    top3 = np.sort(c)[::-1][:3]
    return ComponentStats(object_id, float(c.mean()), float(top3.mean()))


def filter_connected_components(
    corpus: list[ComponentStats], percentile: float = COMPONENT_PERCENTILE
) -> list[CurationDecision]:
    """Fail objects whose mean or top-3 component statistic strictly exceeds
    the corpus percentile of that statistic.  Strict comparison means a
    corpus of identical objects passes entirely."""
    if len(corpus) < 2:
        warnings.warn(
            "component filter needs >= 2 objects for a percentile; passing all",
            stacklevel=2,
        )
        return [
            CurationDecision(s.object_id, True, RULE_NONE, {"mean": s.mean, "top3": s.top3_mean})
            for s in corpus
        ]
    means = np.array([s.mean for s in corpus])
    top3s = np.array([s.top3_mean for s in corpus])
    thr_mean = float(np.percentile(means, percentile))  # linear interpolation
    thr_top3 = float(np.percentile(top3s, percentile))
    out = []
    for s in corpus:
        bad = s.mean > thr_mean or s.top3_mean > thr_top3
        out.append(
            CurationDecision(
                s.object_id,
                not bad,
                RULE_COMPONENTS if bad else RULE_NONE,
                {
                    "mean": s.mean,
                    "top3": s.top3_mean,
                    "thr_mean": thr_mean,
                    "thr_top3": thr_top3,
                },
            )
        )
    return out


def filter_volume_dominance(
    object_id: str,
    whole_sils: dict[str, BinaryImage],
    part_sils: list[dict[str, BinaryImage]],
    part_boxes: list[AABB],
    whole_box: AABB,
    threshold: float = DOMINANCE_THRESHOLD,
    floater_rel_volume: float = FLOATER_REL_VOLUME,
) -> CurationDecision:
    """Fail when one part's silhouette covers >= ``threshold`` of the whole
    silhouette in every view.  Parts with negligible bounding volume are
    flagged as floaters (merged downstream, not a failure)."""
    views = sorted(whole_sils)
    coverage = np.zeros((len(part_sils), len(views)))
    for pi, sils in enumerate(part_sils):
        for vi, view in enumerate(views):
            coverage[pi, vi] = coverage_fraction(sils[view], whole_sils[view])
    dominant = (coverage >= threshold).all(axis=1)
    whole_vol = max(whole_box.volume, 1e-300)
    floaters = [
        i for i, b in enumerate(part_boxes) if b.volume / whole_vol < floater_rel_volume
    ]
    bad = bool(dominant.any())
    return CurationDecision(
        object_id,
        not bad,
        RULE_DOMINANCE if bad else RULE_NONE,
        {
            "max_coverage": float(coverage.min(axis=1).max()) if len(part_sils) else 0.0,
            "dominant_parts": [int(i) for i in np.nonzero(dominant)[0]],
            "floaters": floaters,
            "threshold": threshold,
        },
    )
