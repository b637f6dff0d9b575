"""Hierarchical open-vocabulary map engine (C++ core)."""

from ._opengraph import (
    DataError,
    Map,
    build_map,
    generate_scene,
    hash_embedding,
    lane_graph,
    recall_at_k,
    segmentation_metrics,
)

__all__ = [
    "DataError",
    "Map",
    "build_map",
    "generate_scene",
    "hash_embedding",
    "lane_graph",
    "recall_at_k",
    "segmentation_metrics",
]
