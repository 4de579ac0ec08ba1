"""
Tree planner runs: the full pipeline (build, extract, filter, evaluate) shared
by StaGE, its ablation variants and the goal-biased RRT-sim reduction.

RRT-sim is not a separate planner. It is build_tree with k = n = 1, targets
from C_s with probability goal_bias, no progress gate and no node rejection.
"""

from dataclasses import replace

from functions.errors import StageError
from functions.helper_functions import RandomStreams
from functions.logger import log_run_event
from metrics.metrics import coverage, evaluate_paths
from physics.types import ActionCommand, SceneSpec
from planner.distance import StateMetric
from planner.paths import extract_paths, remove_redundant
from planner.stage import build_tree
from planner.types import PlannerConfig, SearchTree
from stability.types import StableState

from .types import BaselineConfig, RunResult


def tree_budget(tree: SearchTree, config: PlannerConfig, scene: SceneSpec) -> dict:
    """Iterations and simulator steps a tree run consumed."""
    n_substeps = ActionCommand(robot_target_vel=tree.actions[0], duration=config.action_duration).n_substeps(scene.dt)
    simulated = config.n_max - (tree.stats["skipped"] - tree.stats["all_diverged"])
    return {
        "iterations": int(tree.stats["iterations"]),
        "sim_steps": int(simulated * config.n_candidates * n_substeps),
    }


def run_planner(config: PlannerConfig, stable_states: list[StableState], scene: SceneSpec,
                streams: RandomStreams, method: str = "stage", keep_tree: bool = True) -> RunResult:
    """
    Build a tree and turn it into retained paths and a MetricsReport.

    Args:
        config (PlannerConfig): Resolved planner inputs.
        stable_states (list[StableState]): C_s.
        scene (SceneSpec): The scene.
        streams (RandomStreams): Streams of the run seed.
        method (str): Name used in logs and outputs.
        keep_tree (bool): Attach the tree and registry to the result.

    Returns:
        RunResult: Retained paths, report and budget record.
    """
    tree, registry = build_tree(config, stable_states, scene, streams, method=method)
    metric = StateMetric.for_scene(scene, config.weights)
    extracted = extract_paths(tree, stable_states, config.epsilon, metric)
    retained = remove_redundant(extracted, config.d_min, streams.shuffle, metric)
    log_run_event("PATHS", scene=scene.name, method=method, seed=config.seed,
                  extracted=len(extracted), retained=len(retained))

    covered = coverage(tree, stable_states, config.epsilon, metric)
    report = evaluate_paths(retained, len(stable_states), metric, streams.entropy, coverage_pct=covered)
    log_run_event("METRICS", scene=scene.name, method=method, seed=config.seed, **report.to_dict())

    budget = tree_budget(tree, config, scene)
    if budget["iterations"] != config.n_max:
        raise StageError(f"{method} ran {budget['iterations']} iterations with a budget of {config.n_max}.")
    log_run_event("BUDGET", scene=scene.name, method=method, seed=config.seed, **budget)

    return RunResult(
        method=method,
        seed=config.seed,
        root_id=tree.root_stable_id,
        paths=retained,
        report=report,
        extracted=len(extracted),
        budget=budget,
        tree=tree if keep_tree else None,
        registry=registry if keep_tree else None,
    )


def rrt_sim_config(config: PlannerConfig, baseline: BaselineConfig | None = None) -> PlannerConfig:
    """The planner configuration of goal-biased RRT-sim, then the baseline's overrides."""
    baseline = (baseline or BaselineConfig(method="rrt_sim")).validate()
    plain = replace(config, stable_sample_prob=baseline.goal_bias, k=1, n=1,
                    node_rejection=False, require_progress=False)
    return baseline.apply(plain)


def run_rrt_sim(config: PlannerConfig, stable_states: list[StableState], scene: SceneSpec,
                streams: RandomStreams, baseline: BaselineConfig | None = None, method: str = "rrt_sim"):
    """
    Kinodynamic RRT with goal bias, under the same budget, extraction and
    filtering as StaGE.

    Returns:
        tuple[SearchTree, list[Path], MetricsReport]
    """
    result = run_planner(rrt_sim_config(config, baseline), stable_states, scene, streams, method=method)
    return result.tree, result.paths, result.report
