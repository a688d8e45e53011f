"""Corpus-level curation orchestration.

Two phases with a barrier in between: per-object statistics are gathered
over the full corpus first, then verdicts are issued (the component rule
needs corpus percentiles), so decisions are order-independent."""

from __future__ import annotations

from dataclasses import dataclass

from ..geometry import TriMesh, bounding_box, merge_meshes
from .render import VIEWS, count_components, render_silhouette
from .rules import (
    ComponentStats,
    CurationDecision,
    RULE_NONE,
    component_stats,
    filter_connected_components,
    filter_mesh_count,
    filter_volume_dominance,
)


@dataclass(frozen=True)
class ObjectStats:
    object_id: str
    mesh_count: CurationDecision
    components: ComponentStats
    dominance: CurationDecision


def gather_object_stats(
    object_id: str, parts: list[TriMesh], res: int = 256, backend=None
) -> ObjectStats:
    mc = filter_mesh_count(object_id, len(parts))
    merged = merge_meshes(parts)
    whole_sils = {
        v: render_silhouette(merged, v, res=res, backend=backend) for v in VIEWS
    }
    counts = []
    part_sils = []
    for p in parts:
        own = {v: render_silhouette(p, v, res=res, backend=backend) for v in VIEWS}
        counts.extend(count_components(img) for img in own.values())
        # dominance comparison must share the whole's projection frame
        part_sils.append(
            {
                v: render_silhouette(p, v, res=res, frame_mesh=merged, backend=backend)
                for v in VIEWS
            }
        )
    stats = component_stats(object_id, counts)
    dom = filter_volume_dominance(
        object_id,
        whole_sils,
        part_sils,
        [bounding_box(p) for p in parts],
        bounding_box(merged),
    )
    return ObjectStats(object_id, mc, stats, dom)


def curate_corpus(
    objects: list[tuple[str, list[TriMesh]]], res: int = 256, backend=None
) -> list[CurationDecision]:
    """One decision per object, in input order; the first failing rule
    (mesh count, components, dominance) wins."""
    stats = [
        gather_object_stats(oid, parts, res=res, backend=backend)
        for oid, parts in objects
    ]
    comp_decisions = filter_connected_components([s.components for s in stats])
    out = []
    for s, comp in zip(stats, comp_decisions):
        diagnostics = {
            **s.mesh_count.diagnostics,
            **comp.diagnostics,
            **s.dominance.diagnostics,
        }
        if not s.mesh_count.verdict:
            out.append(
                CurationDecision(s.object_id, False, s.mesh_count.failed_rule, diagnostics)
            )
        elif not comp.verdict:
            out.append(CurationDecision(s.object_id, False, comp.failed_rule, diagnostics))
        elif not s.dominance.verdict:
            out.append(
                CurationDecision(s.object_id, False, s.dominance.failed_rule, diagnostics)
            )
        else:
            out.append(CurationDecision(s.object_id, True, RULE_NONE, diagnostics))
    return out
