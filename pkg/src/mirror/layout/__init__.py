"""2D layout engine: neighbor graphs, fuzzy weights, embedding optimization,
and the alternative grid / semantic-axes arrangements."""

from .base import FuzzyGraph, Layout2D, LayoutConfig, NeighborGraph
from .fuzzy import fuzzy_simplicial_set, membership_strengths, smooth_knn_calibration
from .knn import BRUTE_FORCE_LIMIT, knn_graph
from .maps import (compute_semantic_map, grid_layout, semantic_axes_layout,
                   semantic_map_layout)
from .optimize import (find_curve_params, low_dim_kernel, min_dist_target_curve,
                       optimize_layout, spectral_init)

__all__ = [
    "BRUTE_FORCE_LIMIT",
    "FuzzyGraph",
    "Layout2D",
    "LayoutConfig",
    "NeighborGraph",
    "compute_semantic_map",
    "find_curve_params",
    "fuzzy_simplicial_set",
    "grid_layout",
    "knn_graph",
    "low_dim_kernel",
    "membership_strengths",
    "min_dist_target_curve",
    "optimize_layout",
    "semantic_axes_layout",
    "semantic_map_layout",
    "smooth_knn_calibration",
    "spectral_init",
]
