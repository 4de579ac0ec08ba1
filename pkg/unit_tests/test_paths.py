"""
Tests for path extraction, the Hausdorff distance and the redundancy filter.

Run: uv run pytest unit_tests/test_paths.py
"""

import sys
from dataclasses import replace
from pathlib import Path as FilePath

# Add parent directory to path for imports
sys.path.insert(0, str(FilePath(__file__).parent.parent))

import numpy as np
import pytest

from functions.errors import EmptyPathError
from functions.helper_functions import make_streams
from planner.distance import StateMetric
from planner.paths import extract_paths, hausdorff, hausdorff_sets, remove_redundant
from planner.stage import build_tree
from planner.types import Path, PlannerConfig, Weights
from unit_tests.helpers import floor_scene, random_floor_states, sphere_on_floor

CONFIG = PlannerConfig(n_max=30, m=6, k=3, n=2, n_candidates=8, epsilon=3.0, d_min=0.3, seed=0)


def _robot_path(xs, goal_id=1) -> Path:
    """Path whose states differ only in the robot x coordinate."""
    states = np.array([sphere_on_floor(robot=(x, 0.0, 0.5)).to_vector() for x in xs])
    return Path(states=states, actions=[], goal_id=goal_id, start_id=0)


def test_hausdorff_one_dimensional_example():
    assert hausdorff_sets(np.array([[0.0], [1.0]]), np.array([[0.0], [2.0]])) == pytest.approx(1.0)


def test_hausdorff_axioms():
    rng = np.random.default_rng(0)
    sets = [rng.normal(size=(int(rng.integers(1, 8)), 3)) for _ in range(6)]
    for a in sets:
        assert hausdorff_sets(a, a) == 0.0
        for b in sets:
            assert hausdorff_sets(a, b) == pytest.approx(hausdorff_sets(b, a))
            assert hausdorff_sets(a, b) >= 0.0
            for c in sets:
                assert hausdorff_sets(a, c) <= hausdorff_sets(a, b) + hausdorff_sets(b, c) + 1e-12


def test_hausdorff_of_paths_uses_weighted_metric():
    metric = StateMetric.for_scene(floor_scene(), Weights())
    p = _robot_path([0.0, 0.2])
    q = _robot_path([0.0, 0.5])
    # w_rob = 1: the robot offset is the distance
    assert hausdorff(p, q, metric) == pytest.approx(0.3)


def test_hausdorff_of_empty_set_is_rejected():
    with pytest.raises(EmptyPathError):
        hausdorff_sets(np.zeros((0, 3)), np.zeros((2, 3)))


def test_extract_paths_matches_brute_force():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 6)
    metric = StateMetric.for_scene(scene, CONFIG.weights)
    tree, _ = build_tree(CONFIG, states, scene, make_streams(1))
    paths = extract_paths(tree, states, CONFIG.epsilon, metric)

    expected = []
    for node_id in range(tree.size):
        for goal_id, goal in enumerate(states):
            if goal_id == tree.root_stable_id:
                continue
            if float(metric.distance(tree.states[node_id], goal.config.to_vector())) < CONFIG.epsilon:
                expected.append((node_id, goal_id))
    assert expected
    assert [(p.node_ids[-1], p.goal_id) for p in paths] == expected

    for path in paths:
        assert path.start_id == tree.root_stable_id
        assert path.goal_id != tree.root_stable_id
        assert path.node_ids[0] == 0
        assert path.node_ids == tree.path_to_root(path.node_ids[-1])
        assert np.array_equal(path.states, tree.states[path.node_ids])
        assert len(path.actions) == len(path.states) - 1
        assert path.terminal_distance < CONFIG.epsilon


def test_extract_paths_with_single_stable_state_is_empty():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 1)
    config = replace(CONFIG, n_max=5, m=1)
    tree, _ = build_tree(config, states, scene, make_streams(0))
    assert extract_paths(tree, states, 100.0, StateMetric.for_scene(scene, config.weights)) == []


def test_remove_redundant_keeps_spread_out_paths():
    metric = StateMetric.for_scene(floor_scene(), Weights())
    paths = [_robot_path([0.0, x], goal_id=g) for g in (1, 2) for x in (0.0, 0.05, 0.5, 0.55, 0.9)]
    kept = remove_redundant(paths, 0.3, np.random.default_rng(0), metric)

    assert [p.goal_id for p in kept] == sorted(p.goal_id for p in kept)
    for goal_id in (1, 2):
        group = [p for p in paths if p.goal_id == goal_id]
        chosen = [p for p in kept if p.goal_id == goal_id]
        assert len(chosen) == 3
        for i, p in enumerate(chosen):
            for q in chosen[i + 1:]:
                assert hausdorff(p, q, metric) > 0.3
        for p in group:
            assert any(p is q for q in chosen) or any(hausdorff(p, q, metric) <= 0.3 for q in chosen)


def test_remove_redundant_replays_with_same_stream():
    metric = StateMetric.for_scene(floor_scene(), Weights())
    rng = np.random.default_rng(4)
    paths = [_robot_path([0.0, x], goal_id=int(g)) for x, g in zip(rng.uniform(0, 1, 20), rng.integers(1, 4, 20))]
    first = remove_redundant(paths, 0.2, np.random.default_rng(11), metric)
    second = remove_redundant(paths, 0.2, np.random.default_rng(11), metric)
    assert [id(p) for p in first] == [id(p) for p in second]


def test_remove_redundant_never_grows():
    metric = StateMetric.for_scene(floor_scene(), Weights())
    paths = [_robot_path([0.0, 0.1 * i]) for i in range(6)]
    assert len(remove_redundant(paths, 0.0, np.random.default_rng(0), metric)) == 6
    assert len(remove_redundant(paths, 10.0, np.random.default_rng(0), metric)) == 1
    assert remove_redundant([], 0.5, np.random.default_rng(0), metric) == []


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
