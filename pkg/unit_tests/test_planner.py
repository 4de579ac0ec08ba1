"""
Tests for the tree planner: the weighted metric, target selection, the
bounded k-nearest heaps, action optimization and tree construction.

Run: uv run pytest unit_tests/test_planner.py
"""

import sys
from dataclasses import replace
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest
from scipy.stats import chisquare

import planner.stage as stage
from functions.errors import DimensionMismatchError, EmptyTreeError, ValidationError
from functions.helper_functions import make_streams
from physics.scenes import get_scene
from physics.simulator import step
from physics.types import ActionCommand, SystemState, clamp_speeds
from planner.distance import StateMetric, default_epsilon, weighted_distance
from planner.registry import StableRegistry
from planner.stage import build_tree, optimize_actions, reduces_distance, select_target
from planner.types import PlannerConfig, SearchTree, Weights
from unit_tests.helpers import floor_scene, random_floor_states, sphere_on_floor


def _small_config(**changes) -> PlannerConfig:
    base = PlannerConfig(n_max=25, m=6, k=3, n=2, n_candidates=8, epsilon=0.5, d_min=0.5, seed=0)
    return replace(base, **changes)


def test_weighted_distance_example():
    a = SystemState.at_rest(np.array([0.0, 0.0, 0.5]), [[0.0, 0.0, 0.1]])
    b = SystemState.at_rest(np.array([1.0, 0.0, 0.5]), [[1.0, 0.0, 0.1]])
    weights = Weights(w_obj=10.0, w_rob=1.0, w_vel=0.1)
    assert weighted_distance(a, b, weights) == pytest.approx(11.0)
    assert weighted_distance(b, a, weights) == pytest.approx(11.0)
    assert weighted_distance(a, a, weights) == 0.0


def test_weighted_distance_counts_velocities_and_rotation():
    weights = Weights(w_obj=10.0, w_rob=1.0, w_vel=0.1)
    a = SystemState.at_rest(np.zeros(3), [[0.0, 0.0, 0.1]])
    moving = SystemState(a.robot_q, np.array([1.0, 0.0, 0.0]), a.object_pos, a.object_quat,
                         a.object_vel, a.object_omega)
    assert weighted_distance(a, moving, weights) == pytest.approx(0.1)
    # half a turn about z: geodesic angle pi
    turned = SystemState.at_rest(np.zeros(3), [[0.0, 0.0, 0.1]], [[0.0, 0.0, 0.0, 1.0]])
    assert weighted_distance(a, turned, weights) == pytest.approx(10.0 * np.pi ** 2)


def test_weighted_distance_rejects_other_scene():
    one = SystemState.at_rest(np.zeros(3), [[0.0, 0.0, 0.1]])
    two = SystemState.at_rest(np.zeros(6), [[0.0, 0.0, 0.1]])
    with pytest.raises(DimensionMismatchError):
        weighted_distance(one, two, Weights())


def test_metric_triangle_inequality_random():
    scene = get_scene("spheres_cube")
    metric = StateMetric.for_scene(scene, Weights())
    rng = np.random.default_rng(2)
    states = rng.normal(size=(30, scene.state_dim))
    quats = states[:, 15:19]
    states[:, 15:19] = quats / np.linalg.norm(quats, axis=1, keepdims=True)
    d = metric.pairwise(states, states)
    assert np.allclose(d, d.T)
    assert np.all(d[:, :, None] <= d[:, None, :] + d.T[None, :, :] + 1e-9)


def test_default_epsilon_is_positive():
    scene = get_scene("spheres_ramp")
    assert default_epsilon(scene, Weights()) > 0.0


def test_select_target_frequencies():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 5)
    registry = StableRegistry(states, 3, StateMetric.for_scene(scene, Weights()))
    rng = np.random.default_rng(1)
    draws = 4000
    hits = np.zeros(5)
    uniform = 0
    for _ in range(draws):
        target = select_target(registry, rng, 0.3, scene)
        if target.stable_id is None:
            uniform += 1
            assert not np.any(target.vector[3:6]) and not np.any(target.vector[-6:])
        else:
            hits[target.stable_id] += 1
            assert np.array_equal(target.vector, registry.vectors[target.stable_id])
    assert uniform / draws == pytest.approx(0.7, abs=0.03)
    assert np.all(np.abs(hits / hits.sum() - 0.2) < 0.04)


def test_select_target_always_stable_at_probability_one():
    scene = floor_scene()
    registry = StableRegistry(random_floor_states(np.random.default_rng(0), 3), 2,
                              StateMetric.for_scene(scene, Weights()))
    rng = np.random.default_rng(4)
    assert all(select_target(registry, rng, 1.0, scene).stable_id is not None for _ in range(200))


def test_select_target_ids_are_uniform_without_tree_nodes():
    scene = floor_scene()
    m = 8
    registry = StableRegistry(random_floor_states(np.random.default_rng(0), m), 3,
                              StateMetric.for_scene(scene, Weights()))
    assert registry.n_nodes == 0
    rng = np.random.default_rng(12)
    draws = 10_000
    ids = [select_target(registry, rng, 1.0, scene).stable_id for _ in range(draws)]
    counts = np.bincount(ids, minlength=m)
    assert chisquare(counts).pvalue > 0.001
    sigma = np.sqrt(draws * (1 / m) * (1 - 1 / m))
    assert np.all(np.abs(counts - draws / m) < 3 * sigma)


@pytest.mark.parametrize("tree_seed", range(20))
def test_heap_matches_brute_force_with_ties(tree_seed):
    scene = floor_scene()
    metric = StateMetric.for_scene(scene, Weights())
    states = random_floor_states(np.random.default_rng(100 + tree_seed), 20)
    registry = StableRegistry(states, 5, metric)
    rng = np.random.default_rng(tree_seed)
    pool = rng.normal(scale=0.3, size=(400, scene.state_dim))
    pool[:, 6 + 3:6 + 7] = [1.0, 0.0, 0.0, 0.0]
    # repeated states give equal distances
    inserted = np.concatenate([pool, pool[rng.choice(400, size=100)]])
    for node_id, vector in enumerate(inserted):
        registry.update_knn(node_id, vector)
    assert registry.n_nodes == 500
    for stable_id in range(registry.m):
        distances = metric.squared(inserted, registry.vectors[stable_id])
        expected = sorted((float(d), i) for i, d in enumerate(distances))[:5]
        stored = registry.heap_nodes(stable_id)
        assert [node for _, node in stored] == [node for _, node in expected]
        np.testing.assert_allclose([d for d, _ in stored], [d for d, _ in expected], rtol=1e-12)
        assert registry.best_node[stable_id] == expected[0][1]


def test_k_nearest_skips_inactive_and_requires_nodes():
    scene = floor_scene()
    metric = StateMetric.for_scene(scene, Weights())
    registry = StableRegistry(random_floor_states(np.random.default_rng(0), 2), 3, metric)
    with pytest.raises(EmptyTreeError):
        registry.k_nearest(0, np.ones(0, dtype=bool))
    vectors = np.random.default_rng(1).normal(size=(4, scene.state_dim))
    for i, v in enumerate(vectors):
        registry.update_knn(i, v)
    active = np.array([True, False, True, True])
    nearest = registry.k_nearest(0, active)
    assert 1 not in nearest
    assert nearest == [node for _, node in registry.heap_nodes(0) if active[node]]


def test_reduces_distance_matches_brute_force():
    scene = floor_scene()
    metric = StateMetric.for_scene(scene, Weights())
    states = random_floor_states(np.random.default_rng(6), 4)
    registry = StableRegistry(states, 2, metric)
    rng = np.random.default_rng(7)
    for _ in range(50):
        near = rng.normal(scale=0.5, size=scene.state_dim)
        candidates = near + rng.normal(scale=0.2, size=(3, scene.state_dim))
        expected = any(
            metric.squared(c, s) < metric.squared(near, s) - 1e-6
            for c in candidates for s in registry.vectors
        )
        assert reduces_distance(candidates, near, registry, 1e-6) == expected
    with pytest.raises(ValidationError):
        reduces_distance(np.zeros((0, scene.state_dim)), near, registry, 1e-6)


def test_reduces_distance_false_for_identical_candidates():
    scene = floor_scene()
    metric = StateMetric.for_scene(scene, Weights())
    registry = StableRegistry(random_floor_states(np.random.default_rng(0), 3), 2, metric)
    near = sphere_on_floor().to_vector()
    assert not reduces_distance(np.stack([near, near]), near, registry, 1e-6)


def test_optimize_actions_matches_individual_steps():
    scene = floor_scene()
    metric = StateMetric.for_scene(scene, Weights())
    near = sphere_on_floor(robot=(-0.3, 0.0, 0.1)).to_vector()
    target = sphere_on_floor(x=0.2, robot=(0.0, 0.0, 0.1)).to_vector()
    best = optimize_actions(near, target, 3, 10, scene, np.random.default_rng(9), metric, 0.25)

    rng = np.random.default_rng(9)
    velocities = clamp_speeds(rng.normal(size=(10, 1, 3)) * 0.25, scene)
    start = SystemState.from_vector(near, 1, 1)
    ends = np.array([step(start, ActionCommand(robot_target_vel=v, duration=0.25), scene).to_vector()
                     for v in velocities])
    distances = metric.squared(ends, target)
    order = np.argsort(distances, kind="stable")[:3]
    assert len(best) == 3
    assert np.array_equal(best.velocities, velocities[order])
    assert np.array_equal(best.states, ends[order])
    assert np.all(np.diff(best.distances) >= 0)


def test_zero_budget_tree_is_root_only():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 6)
    tree, registry = build_tree(_small_config(n_max=0), states, scene, make_streams(0))
    assert tree.size == 1
    assert tree.stats["iterations"] == 0
    assert np.array_equal(tree.states[0], states[tree.root_stable_id].config.to_vector())
    assert registry.n_nodes == 1


def test_tree_is_deterministic():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 6)
    first, _ = build_tree(_small_config(), states, scene, make_streams(4))
    second, _ = build_tree(_small_config(), states, scene, make_streams(4))
    assert first.size == second.size
    assert np.array_equal(first.state_vectors(), second.state_vectors())
    assert np.array_equal(first.parent[:first.size], second.parent[:second.size])
    assert np.array_equal(first.active_mask(), second.active_mask())


def test_tree_edges_replay_exactly():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 6)
    tree, _ = build_tree(_small_config(stable_sample_prob=0.5), states, scene, make_streams(1))
    assert tree.size > 1
    for node_id in range(1, tree.size):
        parent = int(tree.parent[node_id])
        assert 0 <= parent < node_id
        assert tree.depth[node_id] == tree.depth[parent] + 1
        replayed = step(SystemState.from_vector(tree.states[parent], 1, 1), tree.action(node_id), scene)
        assert np.array_equal(replayed.to_vector(), tree.states[node_id])


def test_disabled_nodes_get_no_new_children():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 6)
    tree, _ = build_tree(_small_config(n_max=60, k=1), states, scene, make_streams(2))
    for node_id in range(1, tree.size):
        parent = int(tree.parent[node_id])
        if tree.disabled_at[parent] >= 0:
            assert node_id < tree.disabled_at[parent]
    assert int(np.sum(~tree.active_mask())) == tree.stats["rejections"]


def test_without_node_rejection_every_node_stays_active():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 6)
    tree, _ = build_tree(_small_config(n_max=40, node_rejection=False), states, scene, make_streams(2))
    assert np.all(tree.active_mask())
    assert tree.stats["iterations"] == 40


def test_insertions_are_bounded_by_n():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 6)
    config = _small_config(n_max=30)
    tree, registry = build_tree(config, states, scene, make_streams(3))
    assert tree.size <= 1 + config.n * tree.stats["expansions"]
    assert registry.n_nodes == tree.size
    for stable_id in range(registry.m):
        assert len(registry.heap_nodes(stable_id)) == min(config.k, tree.size)


def test_best_distance_never_increases_during_a_run(monkeypatch):
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 6)
    history = []
    original = stage.update_knn

    def recording(registry, node_id, state):
        original(registry, node_id, state)
        history.append(registry.best_distance.copy())

    monkeypatch.setattr(stage, "update_knn", recording)
    tree, registry = build_tree(_small_config(n_max=60, stable_sample_prob=0.5), states, scene, make_streams(6))
    assert len(history) == tree.size - 1 > 0
    trace = np.stack(history)
    assert np.all(np.diff(trace, axis=0) <= 0.0)
    np.testing.assert_array_equal(trace[-1], registry.best_distance)


def test_tree_growth_keeps_rows_and_clears_new_ones():
    root = sphere_on_floor().to_vector()
    tree = SearchTree(root, 1, 1, 0.25, root_stable_id=0, capacity=2)
    tree.disable(0)
    for i in range(4):
        tree.add_node(root + i + 1, i, np.full((1, 3), i + 1.0))
    assert tree.size == 5 and tree.states.shape[0] == 8
    assert np.array_equal(tree.states[1:5], root + np.arange(1, 5)[:, None])
    assert list(tree.parent[:5]) == [-1, 0, 1, 2, 3]
    assert tree.disabled_at[0] == 1 and list(tree.active[:5]) == [False, True, True, True, True]
    assert not np.any(tree.states[5:]) and not np.any(tree.actions[5:])
    assert np.all(tree.parent[5:] == -1) and np.all(tree.disabled_at[5:] == -1) and not np.any(tree.active[5:])


def test_build_tree_rejects_bad_config():
    scene = floor_scene()
    states = random_floor_states(np.random.default_rng(0), 3)
    with pytest.raises(ValidationError):
        build_tree(_small_config(k=0), states, scene, make_streams(0))
    with pytest.raises(ValidationError):
        build_tree(_small_config(n=9), states, scene, make_streams(0))
    with pytest.raises(ValidationError):
        build_tree(_small_config(), [], scene, make_streams(0))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
