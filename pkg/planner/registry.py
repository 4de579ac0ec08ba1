"""
Stable-state registry: the fixed set C_s and, per stable state, a bounded
max-heap with the k tree nodes nearest to it.
"""

import heapq

import numpy as np

from functions.errors import EmptyTreeError
from planner.distance import StateMetric
from stability.types import StableState


class StableRegistry:
    """
    Heap entries are (-d, -node_id): the root is the farthest stored node,
    the newest one among equal distances, so ties keep the lowest ids.
    """

    def __init__(self, states: list[StableState], k: int, metric: StateMetric, root_id: int | None = None):
        self.states = states
        self.k = k
        self.metric = metric
        self.root_id = root_id
        self.vectors = np.array([s.config.to_vector() for s in states])
        self.heaps: list[list[tuple[float, int]]] = [[] for _ in states]
        # current heap maximum, inf while a heap is not full
        self.heap_max = np.full(len(states), np.inf)
        self.best_distance = np.full(len(states), np.inf)
        self.best_node = np.full(len(states), -1, dtype=int)
        self.n_nodes = 0

    @property
    def m(self) -> int:
        return len(self.states)

    def goal_ids(self) -> list[int]:
        """Stable ids that count as goals (all but the root's)."""
        return [i for i in range(self.m) if i != self.root_id]

    def update_knn(self, node_id: int, state: np.ndarray) -> np.ndarray:
        """
        Offer a newly inserted node to every heap. O(m log k).

        Returns:
            np.ndarray: squared distances of the node to every stable state.
        """
        distances = self.metric.squared(self.vectors, state)
        improved = distances < self.best_distance
        self.best_distance = np.where(improved, distances, self.best_distance)
        self.best_node = np.where(improved, node_id, self.best_node)
        for i in np.flatnonzero(distances < self.heap_max):
            heap = self.heaps[i]
            entry = (-float(distances[i]), -node_id)
            if len(heap) < self.k:
                heapq.heappush(heap, entry)
            else:
                heapq.heapreplace(heap, entry)
            if len(heap) == self.k:
                self.heap_max[i] = -heap[0][0]
        self.n_nodes += 1
        return distances

    def heap_nodes(self, stable_id: int) -> list[tuple[float, int]]:
        """(squared distance, node id) of the heap, nearest first."""
        return sorted((-d, -node) for d, node in self.heaps[stable_id])

    def k_nearest(self, stable_id: int, active: np.ndarray) -> list[int]:
        """
        Active nodes among the k nearest to a tracked stable state, nearest first.

        Raises:
            EmptyTreeError: No node has been registered yet.
        """
        if self.n_nodes == 0:
            raise EmptyTreeError("The tree has no node to select.")
        return [node for _, node in self.heap_nodes(stable_id) if active[node]]

    def coverage_ids(self, epsilon: float) -> list[int]:
        """Goal ids whose best node lies strictly within epsilon."""
        return [i for i in self.goal_ids() if np.sqrt(self.best_distance[i]) < epsilon]
