"""
Path extraction from a finished tree and the Hausdorff redundancy filter.
"""

from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from functions.errors import EmptyPathError
from planner.distance import StateMetric
from planner.types import Path, SearchTree
from stability.types import StableState

_CHUNK = 4096


def euclidean_pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cdist(a, b)


def directed_hausdorff(distances: np.ndarray) -> float:
    """max over rows of the row minimum of a pairwise distance matrix."""
    return float(np.max(np.min(distances, axis=1)))


def hausdorff_sets(a: np.ndarray, b: np.ndarray,
                   pairwise: Callable[[np.ndarray, np.ndarray], np.ndarray] = euclidean_pairwise) -> float:
    """
    Undirected Hausdorff distance between two point sets (rows).

    Raises:
        EmptyPathError: Either set is empty.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptyPathError("Hausdorff distance of an empty state set is undefined.")
    distances = pairwise(a, b)
    return max(directed_hausdorff(distances), directed_hausdorff(distances.T))


def hausdorff(p: Path, q: Path, metric: StateMetric) -> float:
    """Hausdorff distance between the state sets of two paths, base distance sqrt(weighted_distance)."""
    return hausdorff_sets(p.states, q.states, metric.pairwise)


def path_to_root(tree: SearchTree, node_id: int, goal_id: int, terminal_distance: float) -> Path:
    ids = tree.path_to_root(node_id)
    return Path(
        states=tree.states[ids].copy(),
        actions=[tree.action(i) for i in ids[1:]],
        goal_id=goal_id,
        start_id=tree.root_stable_id,
        node_ids=ids,
        terminal_distance=terminal_distance,
    )


def extract_paths(tree: SearchTree, stable_states: list[StableState], epsilon: float,
                  metric: StateMetric) -> list[Path]:
    """
    One path per (node, goal) with sqrt(weighted_distance) < epsilon, ordered by
    node id then goal id. The root's own stable state is not a goal.
    """
    goals = np.array([i for i in range(len(stable_states)) if i != tree.root_stable_id], dtype=int)
    if goals.size == 0:
        return []
    goal_vectors = np.array([stable_states[i].config.to_vector() for i in goals])
    paths = []
    for start in range(0, tree.size, _CHUNK):
        nodes = tree.states[start:min(start + _CHUNK, tree.size)]
        distances = metric.pairwise(nodes, goal_vectors)
        for row, column in zip(*np.nonzero(distances < epsilon)):
            paths.append(path_to_root(tree, start + int(row), int(goals[column]), float(distances[row, column])))
    return paths


def remove_redundant(paths: list[Path], d_min: float, rng: np.random.Generator, metric: StateMetric) -> list[Path]:
    """
    Greedy diversity filter per goal: visit the goal's paths in a random order
    and keep a path iff its Hausdorff distance to every kept path of that goal
    exceeds d_min. Goals are processed in ascending id order.
    """
    by_goal: dict[int, list[Path]] = {}
    for path in paths:
        by_goal.setdefault(path.goal_id, []).append(path)
    kept_all = []
    for goal_id in sorted(by_goal):
        group = by_goal[goal_id]
        kept: list[Path] = []
        for index in rng.permutation(len(group)):
            candidate = group[int(index)]
            if all(hausdorff(candidate, other, metric) > d_min for other in kept):
                kept.append(candidate)
        kept_all.extend(kept)
    return kept_all
