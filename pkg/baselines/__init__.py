"""
Baselines Module

Reference methods compared against StaGE (goal-biased RRT-sim, predictive
sampling) and the ablation grid of StaGE variants.

Usage:
    from baselines import run_rrt_sim, run_ablation_grid

    tree, paths, report = run_rrt_sim(config, stable_states, scene, streams)
"""

from .types import BASELINE_METHODS, BaselineConfig, RunResult, TrajectoryResult
from .rrt_sim import rrt_sim_config, run_planner, run_rrt_sim, tree_budget
from .predictive_sampling import ps_step_budget, run_predictive_sampling, run_predictive_sampling_all
from .ablation import VARIANTS, grid_cells, grid_table, run_ablation_grid, summarize, variant_config

__all__ = [
    "BASELINE_METHODS",
    "BaselineConfig",
    "RunResult",
    "TrajectoryResult",
    "VARIANTS",
    "grid_cells",
    "grid_table",
    "ps_step_budget",
    "rrt_sim_config",
    "run_ablation_grid",
    "run_planner",
    "run_predictive_sampling",
    "run_predictive_sampling_all",
    "run_rrt_sim",
    "summarize",
    "tree_budget",
    "variant_config",
]
