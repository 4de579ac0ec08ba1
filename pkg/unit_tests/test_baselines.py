"""
Tests for the reference methods: RRT-sim as a configuration of the tree
planner, predictive sampling and the ablation grid.

Run: uv run pytest unit_tests/test_baselines.py
"""

import sys
from dataclasses import replace
from pathlib import Path as FilePath

# Add parent directory to path for imports
sys.path.insert(0, str(FilePath(__file__).parent.parent))

import numpy as np
import pytest

from baselines.ablation import VARIANTS, grid_cells, grid_table, run_ablation_grid, summarize, variant_config
from baselines.predictive_sampling import ps_step_budget, run_predictive_sampling, run_predictive_sampling_all
from baselines.rrt_sim import rrt_sim_config, run_planner, run_rrt_sim
from baselines.types import BaselineConfig
from functions.errors import ValidationError
from functions.helper_functions import make_streams
from physics.simulator import step
from physics.types import SystemState
from planner.types import PlannerConfig
from unit_tests.helpers import fake_stable_states, floor_scene, random_floor_states, sphere_on_floor

CONFIG = PlannerConfig(n_max=20, m=5, k=3, n=2, n_candidates=8, epsilon=1.5, d_min=0.3, seed=0)


def test_rrt_sim_configuration():
    config = rrt_sim_config(CONFIG, BaselineConfig(goal_bias=0.3))
    assert (config.k, config.n, config.stable_sample_prob) == (1, 1, 0.3)
    assert not config.node_rejection and not config.require_progress
    assert (config.n_max, config.n_candidates, config.epsilon) == (CONFIG.n_max, CONFIG.n_candidates, CONFIG.epsilon)


def test_baseline_overrides_are_checked():
    with pytest.raises(ValidationError):
        rrt_sim_config(CONFIG, BaselineConfig(variant_overrides={"seed": 3}))
    with pytest.raises(ValidationError):
        BaselineConfig(goal_bias=1.5).validate()
    with pytest.raises(ValidationError):
        BaselineConfig(method="dijkstra").validate()


def test_rrt_sim_reduces_to_no_knn_variant():
    """Goal bias 1 with n, progress gate and rejection restored is the k = 1 variant."""
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 5)
    baseline = BaselineConfig(goal_bias=1.0, variant_overrides={"n": CONFIG.n, "node_rejection": True,
                                                                 "require_progress": True})
    rrt_tree, rrt_paths, _ = run_rrt_sim(CONFIG, states, scene, make_streams(3), baseline)
    knn = run_planner(variant_config(CONFIG, "no_knn"), states, scene, make_streams(3), method="no_knn")
    assert np.array_equal(rrt_tree.state_vectors(), knn.tree.state_vectors())
    assert [p.node_ids for p in rrt_paths] == [p.node_ids for p in knn.paths]


def test_rrt_sim_grows_one_node_per_simulated_iteration():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 5)
    tree, paths, report = run_rrt_sim(CONFIG, states, scene, make_streams(1))
    assert tree.stats["iterations"] == CONFIG.n_max
    assert tree.size == 1 + CONFIG.n_max - tree.stats["skipped"]
    assert np.all(tree.active_mask())
    assert report.path_count == len(paths)


def test_run_planner_budget_record():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 5)
    result = run_planner(CONFIG, states, scene, make_streams(0), keep_tree=False)
    assert result.tree is None and result.registry is None
    assert result.budget["iterations"] == CONFIG.n_max
    assert result.budget["sim_steps"] <= CONFIG.n_max * CONFIG.n_candidates * 25
    assert result.extracted >= len(result.paths)


def test_predictive_sampling_start_equals_goal():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 3)
    attempt = run_predictive_sampling(BaselineConfig(method="predictive_sampling"), CONFIG, states[1], states[1],
                                      scene, np.random.default_rng(0), 1000)
    assert attempt.success and attempt.steps_used == 0
    assert attempt.states.shape[0] == 1 and attempt.actions == []


def test_predictive_sampling_reaches_a_nearby_robot_goal():
    scene = floor_scene()
    start, goal = fake_stable_states([
        sphere_on_floor(robot=(0.5, 0.5, 0.5)),
        sphere_on_floor(robot=(0.8, 0.5, 0.5)),
    ])
    baseline = BaselineConfig(method="predictive_sampling", ps_horizon=2, ps_samples=16)
    config = replace(CONFIG, epsilon=0.15)
    attempt = run_predictive_sampling(baseline, config, start, goal, scene, np.random.default_rng(2), 100000)
    assert attempt.success
    assert attempt.terminal_distance < config.epsilon
    assert len(attempt.actions) == attempt.states.shape[0] - 1
    # applied actions replay exactly
    current = SystemState.from_vector(attempt.states[0], 1, 1)
    for action, expected in zip(attempt.actions, attempt.states[1:]):
        current = step(current, action, scene)
        assert np.array_equal(current.to_vector(), expected)


def test_predictive_sampling_stops_at_budget():
    scene = floor_scene()
    start, goal = fake_stable_states([
        sphere_on_floor(robot=(0.5, 0.5, 0.5)),
        sphere_on_floor(x=0.4, robot=(-0.5, -0.5, 0.5)),
    ])
    baseline = BaselineConfig(method="predictive_sampling", ps_horizon=2, ps_samples=4)
    per_control = 2 * 4 * 25
    attempt = run_predictive_sampling(baseline, replace(CONFIG, epsilon=0.01), start, goal, scene,
                                      np.random.default_rng(0), 3 * per_control + 1)
    assert not attempt.success
    assert attempt.steps_used == 3 * per_control
    assert "not reached" in attempt.reason


def test_predictive_sampling_over_all_goals():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 4)
    baseline = BaselineConfig(method="predictive_sampling", ps_horizon=2, ps_samples=4)
    result = run_predictive_sampling_all(baseline, CONFIG, states, scene, make_streams(0))
    per_pair = ps_step_budget(CONFIG, 4, scene)
    assert per_pair == CONFIG.n_max * CONFIG.n_candidates * 25 // 3
    assert result.budget["pairs"] == 3
    assert result.budget["sim_steps"] <= result.budget["sim_steps_cap"] == 3 * per_pair
    assert all(p.start_id == result.root_id and p.goal_id != result.root_id for p in result.paths)
    assert result.report.path_count == len(result.paths)
    with pytest.raises(ValidationError):
        run_predictive_sampling_all(baseline, CONFIG, states[:1], scene, make_streams(0))


def test_grid_cells_in_output_order():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 6)
    cells = grid_cells(scene, states, [0, 1], CONFIG, sweeps=("n", "m"), sweep_values=(1, 2),
                       stable_sizes=(3, 6))
    names = [cell.method for cell in cells]
    assert names == [name for name in list(VARIANTS) + ["sweep_n1", "sweep_n2", "sweep_m3", "sweep_m6"]
                     for _ in (0, 1)]
    assert [cell.config.seed for cell in cells[:2]] == [0, 1]
    by_name = {cell.method: cell for cell in cells}
    assert by_name["no_rejection"].config.node_rejection is False
    assert by_name["no_n_best"].config.n == 1
    assert by_name["no_knn"].config.k == 1
    assert by_name["uniform_80"].config.stable_sample_prob == pytest.approx(0.2)
    assert len(by_name["sweep_m3"].stable_states) == 3


def test_grid_cells_reject_bad_requests():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 4)
    with pytest.raises(ValidationError):
        grid_cells(scene, states, [], CONFIG)
    with pytest.raises(ValidationError):
        grid_cells(scene, states, [0], CONFIG, sweeps=("w",))
    with pytest.raises(ValidationError):
        grid_cells(scene, states, [0], CONFIG, sweeps=("m",), stable_sizes=(10,))
    with pytest.raises(ValidationError):
        variant_config(CONFIG, "no_such_variant")


def test_ablation_grid_table_and_summary():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 4)
    config = replace(CONFIG, n_max=5)
    results = run_ablation_grid(scene, states, [0], config)
    assert [r.method for r in results] == list(VARIANTS)
    table = grid_table(results, scene.name)
    assert list(table["method"]) == list(VARIANTS)
    summary = summarize(table)
    assert list(summary["method"]) == list(VARIANTS)
    assert list(summary.columns) == ["method", "count", "coverage", "entropy", "avg_hausdorff"]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
