"""
Planner Module

Stability-guided kinodynamic tree search, path extraction and the Hausdorff
diversity filter.

Usage:
    from planner import PlannerConfig, build_tree, extract_paths, remove_redundant

    tree, registry = build_tree(config, stable_states, scene, streams)
    paths = extract_paths(tree, stable_states, config.epsilon, metric)
"""

from .types import Path, PlannerConfig, SearchTree, TreeNode, Weights
from .distance import StateMetric, default_epsilon, weighted_distance
from .registry import StableRegistry
from .stage import (
    build_tree,
    k_nearest,
    nearest_linear,
    optimize_actions,
    reduces_distance,
    select_target,
    update_knn,
)
from .paths import extract_paths, hausdorff, hausdorff_sets, remove_redundant

__all__ = [
    "Path",
    "PlannerConfig",
    "SearchTree",
    "StableRegistry",
    "StateMetric",
    "TreeNode",
    "Weights",
    "build_tree",
    "default_epsilon",
    "extract_paths",
    "hausdorff",
    "hausdorff_sets",
    "k_nearest",
    "nearest_linear",
    "optimize_actions",
    "reduces_distance",
    "remove_redundant",
    "select_target",
    "update_knn",
    "weighted_distance",
]
