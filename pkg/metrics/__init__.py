"""
Metrics Module

Path count, coverage, entropy and average Hausdorff distance of a run.
"""

from .metrics import (
    MetricsReport,
    avg_hausdorff,
    coverage,
    coverage_from_paths,
    coverage_from_registry,
    evaluate_paths,
    kl_entropy,
    visited_pool,
)

__all__ = [
    "MetricsReport",
    "avg_hausdorff",
    "coverage",
    "coverage_from_paths",
    "coverage_from_registry",
    "evaluate_paths",
    "kl_entropy",
    "visited_pool",
]
