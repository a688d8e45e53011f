"""Data curation: filtering rules, silhouette rendering, visibility culling,
and whole-part pair generation."""

from .corpus import ObjectStats, curate_corpus, gather_object_stats
from .pairs import (
    PartObject,
    PipelineError,
    assign_part_masks,
    load_part_object,
    make_whole_part_pairs,
    merge_floaters,
    save_part_object,
)
from .render import BinaryImage, count_components, coverage_fraction, render_silhouette
from .rules import (
    ComponentStats,
    CurationDecision,
    component_stats,
    filter_connected_components,
    filter_mesh_count,
    filter_volume_dominance,
)
from .visibility import visibility_cull, visible_face_ids

__all__ = [
    "BinaryImage",
    "ComponentStats",
    "CurationDecision",
    "ObjectStats",
    "PartObject",
    "PipelineError",
    "assign_part_masks",
    "component_stats",
    "count_components",
    "coverage_fraction",
    "curate_corpus",
    "filter_connected_components",
    "filter_mesh_count",
    "filter_volume_dominance",
    "gather_object_stats",
    "load_part_object",
    "make_whole_part_pairs",
    "merge_floaters",
    "render_silhouette",
    "save_part_object",
    "visibility_cull",
    "visible_face_ids",
]
