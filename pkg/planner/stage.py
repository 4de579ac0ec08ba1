"""
Stability-guided kinodynamic tree construction.

Each iteration samples a target, picks one of its k nearest active nodes,
simulates n_candidates random actions from it and inserts the n best end
states, or disables the node when none of them gets closer to any stable state.
"""

from dataclasses import dataclass

import numpy as np

from config.constants import LOG_EVERY
from functions.errors import AllDivergedError, EmptyTreeError, ValidationError
from functions.helper_functions import RandomStreams, random_quaternion
from functions.logger import log_run_event
from physics.simulator import rollout_candidates
from physics.types import ActionCommand, SceneSpec, clamp_speeds
from planner.distance import StateMetric
from planner.registry import StableRegistry
from planner.types import PlannerConfig, SearchTree
from stability.types import StableState


@dataclass(frozen=True, eq=False)
class Target:
    vector: np.ndarray
    stable_id: int | None  # None for untracked uniform targets


@dataclass(frozen=True, eq=False)
class Candidates:
    """Best simulated actions, nearest to the target first."""
    velocities: np.ndarray  # (n, R, 3)
    states: np.ndarray      # (n, D)
    distances: np.ndarray   # (n,) squared distance to the target

    def __len__(self) -> int:
        return self.states.shape[0]

    def actions(self, duration: float) -> list[ActionCommand]:
        return [ActionCommand(robot_target_vel=v.copy(), duration=duration) for v in self.velocities]


def sample_uniform_state(scene: SceneSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform configuration with zero velocity; may collide, targets need not be feasible."""
    robot_q = np.concatenate([rng.uniform(robot.low, robot.high) for robot in scene.robots])
    low, high = scene.object_bounds()
    positions = [rng.uniform(low, high) for _ in scene.objects]
    quats = [random_quaternion(rng) if obj.shape == "box" else np.array([1.0, 0.0, 0.0, 0.0])
             for obj in scene.objects]
    n_o = scene.n_objects
    return np.concatenate([
        robot_q, np.zeros_like(robot_q),
        np.array(positions).reshape(-1), np.array(quats).reshape(-1), np.zeros(6 * n_o),
    ])


def select_target(registry: StableRegistry, rng: np.random.Generator, stable_sample_prob: float,
                  scene: SceneSpec) -> Target:
    """Stable state (uniform over C_s) with probability stable_sample_prob, else an untracked uniform state."""
    if registry.m == 0:
        raise ValidationError("The stable-state set is empty.")
    if rng.random() < stable_sample_prob:
        stable_id = int(rng.integers(registry.m))
        return Target(vector=registry.vectors[stable_id], stable_id=stable_id)
    return Target(vector=sample_uniform_state(scene, rng), stable_id=None)


def k_nearest(registry: StableRegistry, target_id: int, k: int, tree: SearchTree) -> list[int]:
    """Active nodes among the registry's k nearest to a stable state; k is fixed by the registry."""
    if k != registry.k:
        raise ValidationError(f"Registry tracks k={registry.k}, asked for k={k}.")
    return registry.k_nearest(target_id, tree.active_mask())


def nearest_linear(tree: SearchTree, target: np.ndarray, k: int, metric: StateMetric) -> list[int]:
    """k nearest active nodes by linear scan, for untracked targets."""
    if tree.size == 0:
        raise EmptyTreeError("The tree has no node to select.")
    distances = np.where(tree.active_mask(), metric.squared(tree.state_vectors(), target), np.inf)
    order = np.argsort(distances, kind="stable")[:k]
    return [int(i) for i in order if np.isfinite(distances[i])]


def update_knn(registry: StableRegistry, node_id: int, state: np.ndarray) -> None:
    registry.update_knn(node_id, state)


def optimize_actions(near_state: np.ndarray, target: np.ndarray, n: int, n_candidates: int, scene: SceneSpec,
                     rng: np.random.Generator, metric: StateMetric, duration: float) -> Candidates:
    """
    Simulate n_candidates Gaussian velocity commands (sigma = half the max
    speed, clamped) and keep the n end states nearest to the target, ties by
    candidate index.

    Raises:
        AllDivergedError: Every candidate diverged.
    """
    sigma = np.array([robot.max_speed / 2.0 for robot in scene.robots])
    velocities = rng.normal(size=(n_candidates, scene.n_robots, 3)) * sigma[None, :, None]
    velocities = clamp_speeds(velocities, scene)
    n_substeps = ActionCommand(robot_target_vel=velocities[0], duration=duration).n_substeps(scene.dt)
    ends, diverged = rollout_candidates(near_state, velocities, n_substeps, scene)
    if np.all(diverged):
        raise AllDivergedError(f"All {n_candidates} candidate actions diverged.")
    distances = np.where(diverged, np.inf, metric.squared(ends, target))
    order = np.argsort(distances, kind="stable")[:n]
    order = order[np.isfinite(distances[order])]
    return Candidates(velocities=velocities[order], states=ends[order], distances=distances[order])


def reduces_distance(candidates: np.ndarray, near_state: np.ndarray, registry: StableRegistry,
                     progress_tol: float, compare_to_best: bool = False) -> bool:
    """
    True iff some candidate is closer to some stable state than the expanding
    node is (or than the best node so far, with compare_to_best), by more than
    progress_tol.
    """
    if candidates.shape[0] == 0:
        raise ValidationError("reduces_distance needs at least one candidate.")
    if compare_to_best:
        reference = registry.best_distance
    else:
        reference = registry.metric.squared(registry.vectors, near_state)
    candidate_distances = registry.metric.squared(candidates[:, None, :], registry.vectors[None, :, :])
    return bool(np.any(candidate_distances < reference[None, :] - progress_tol))


def build_tree(config: PlannerConfig, stable_states: list[StableState], scene: SceneSpec,
               streams: RandomStreams, method: str = "stage") -> tuple[SearchTree, StableRegistry]:
    """
    Grow the tree for exactly config.n_max iterations.

    The root is a stable state drawn from C_s; that state is excluded from the
    goals. Iterations without an active near node or with only diverged
    candidates are counted as skipped.

    Returns:
        tuple[SearchTree, StableRegistry]: The tree and the registry it fed.
    """
    config.validate()
    if not stable_states:
        raise ValidationError("build_tree needs a nonempty set of stable states.")
    metric = StateMetric.for_scene(scene, config.weights)
    root_id = int(streams.root.integers(len(stable_states)))
    registry = StableRegistry(stable_states, config.k, metric, root_id=root_id)
    root = stable_states[root_id].config.with_zero_velocity().to_vector()
    tree = SearchTree(root, scene.n_robots, scene.n_objects, config.action_duration, root_stable_id=root_id,
                      capacity=max(16, min(config.n_max * config.n + 1, 65536)))
    registry.update_knn(0, root)
    log_run_event("START", scene=scene.name, method=method, seed=config.seed,
                  budget=config.n_max, stable_states=len(stable_states), root=root_id, k=config.k, n=config.n)

    for iteration in range(config.n_max):
        target = select_target(registry, streams.targets, config.stable_sample_prob, scene)
        if target.stable_id is not None:
            near = k_nearest(registry, target.stable_id, config.k, tree)
        else:
            near = nearest_linear(tree, target.vector, config.k, metric)
        if not near:
            tree.stats["skipped"] += 1
            continue
        near_id = near[int(streams.near.integers(len(near)))]
        near_state = tree.states[near_id].copy()
        try:
            candidates = optimize_actions(near_state, target.vector, config.n, config.n_candidates, scene,
                                          streams.actions, metric, config.action_duration)
        except AllDivergedError:
            tree.stats["skipped"] += 1
            tree.stats["all_diverged"] += 1
            continue

        progress = (not config.require_progress) or reduces_distance(
            candidates.states, near_state, registry, config.progress_tol, config.compare_to_best)
        if progress:
            for velocity, state in zip(candidates.velocities, candidates.states):
                node_id = tree.add_node(state, near_id, velocity)
                update_knn(registry, node_id, state)
            tree.stats["expansions"] += 1
        else:
            tree.stats["rejections"] += 1
            if config.node_rejection:
                tree.disable(near_id)

        if (iteration + 1) % LOG_EVERY == 0:
            log_run_event("ITERATION", scene=scene.name, method=method, seed=config.seed,
                          iteration=iteration + 1, nodes=tree.size, active=int(np.sum(tree.active_mask())))

    tree.stats["iterations"] = config.n_max
    log_run_event("TREE_DONE", scene=scene.name, method=method, seed=config.seed, nodes=tree.size, **tree.stats)
    return tree, registry
