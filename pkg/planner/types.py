"""
Domain types of the planner: configuration, tree and paths.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from config.constants import (
    ACTION_DURATION, K_NEAREST, N_BEST, N_CANDIDATES, N_MAX, PROGRESS_TOL, W_OBJ, W_ROB, W_VEL,
)
from functions.errors import ValidationError
from physics.types import ActionCommand, SystemState


@dataclass(frozen=True)
class Weights:
    w_obj: float = W_OBJ
    w_rob: float = W_ROB
    w_vel: float = W_VEL


@dataclass(frozen=True)
class PlannerConfig:
    """Inputs of one tree construction. epsilon and d_min must be resolved (> 0)."""
    n_max: int = N_MAX
    m: int = 0
    k: int = K_NEAREST
    n: int = N_BEST
    n_candidates: int = N_CANDIDATES
    epsilon: float = 0.0
    d_min: float = 0.0
    w_obj: float = W_OBJ
    w_rob: float = W_ROB
    w_vel: float = W_VEL
    stable_sample_prob: float = 1.0
    node_rejection: bool = True
    seed: int = 0
    require_progress: bool = True
    compare_to_best: bool = False
    action_duration: float = ACTION_DURATION
    progress_tol: float = PROGRESS_TOL

    @property
    def weights(self) -> Weights:
        return Weights(self.w_obj, self.w_rob, self.w_vel)

    def validate(self) -> "PlannerConfig":
        if self.n_max < 0:
            raise ValidationError(f"n_max must be non-negative, got {self.n_max}.")
        if self.k < 1:
            raise ValidationError(f"k must be at least 1, got {self.k}.")
        if not 1 <= self.n <= self.n_candidates:
            raise ValidationError(f"n must lie in 1..n_candidates ({self.n_candidates}), got {self.n}.")
        if self.epsilon <= 0 or self.d_min <= 0:
            raise ValidationError(f"epsilon and d_min must be positive, got {self.epsilon} / {self.d_min}.")
        if not 0.0 <= self.stable_sample_prob <= 1.0:
            raise ValidationError(f"stable_sample_prob must lie in [0, 1], got {self.stable_sample_prob}.")
        if min(self.w_obj, self.w_rob, self.w_vel) < 0:
            raise ValidationError("Distance weights must be non-negative.")
        if self.action_duration <= 0:
            raise ValidationError(f"action_duration must be positive, got {self.action_duration}.")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class TreeNode:
    id: int
    state: SystemState
    parent: int | None
    incoming_action: ActionCommand | None
    depth: int
    active: bool


def _extended(array: np.ndarray, capacity: int, fill) -> np.ndarray:
    """Copy of `array` with `capacity` rows; the new rows hold `fill`."""
    grown = np.full((capacity,) + array.shape[1:], fill, dtype=array.dtype)
    grown[:array.shape[0]] = array
    return grown


class SearchTree:
    """
    Kinodynamic tree in growable arrays. Node 0 is the root.
    """

    def __init__(self, root: np.ndarray, n_robots: int, n_objects: int, action_duration: float,
                 root_stable_id: int, capacity: int = 1024):
        self.n_robots = n_robots
        self.n_objects = n_objects
        self.action_duration = action_duration
        self.root_stable_id = root_stable_id
        self.size = 0
        self.states = np.zeros((capacity, root.shape[0]))
        self.parent = np.full(capacity, -1, dtype=int)
        self.depth = np.zeros(capacity, dtype=int)
        self.active = np.zeros(capacity, dtype=bool)
        self.actions = np.zeros((capacity, n_robots, 3))
        # tree size at the moment a node was disabled, -1 while active
        self.disabled_at = np.full(capacity, -1, dtype=int)
        self.stats = {"iterations": 0, "expansions": 0, "rejections": 0, "skipped": 0, "all_diverged": 0}
        self.add_node(root, -1, None)

    def _grow(self):
        capacity = 2 * self.states.shape[0]
        self.states = _extended(self.states, capacity, 0.0)
        self.parent = _extended(self.parent, capacity, -1)
        self.depth = _extended(self.depth, capacity, 0)
        self.active = _extended(self.active, capacity, False)
        self.actions = _extended(self.actions, capacity, 0.0)
        self.disabled_at = _extended(self.disabled_at, capacity, -1)

    def add_node(self, state: np.ndarray, parent: int, action: np.ndarray | None) -> int:
        if self.size == self.states.shape[0]:
            self._grow()
        node_id = self.size
        self.states[node_id] = state
        self.parent[node_id] = parent
        self.depth[node_id] = 0 if parent < 0 else self.depth[parent] + 1
        self.active[node_id] = True
        self.actions[node_id] = 0.0 if action is None else action
        self.disabled_at[node_id] = -1
        self.size += 1
        return node_id

    def disable(self, node_id: int):
        if self.active[node_id]:
            self.active[node_id] = False
            self.disabled_at[node_id] = self.size

    def state_vectors(self) -> np.ndarray:
        return self.states[:self.size]

    def active_mask(self) -> np.ndarray:
        return self.active[:self.size]

    def action(self, node_id: int) -> ActionCommand | None:
        if self.parent[node_id] < 0:
            return None
        return ActionCommand(robot_target_vel=self.actions[node_id].copy(), duration=self.action_duration)

    def node(self, node_id: int) -> TreeNode:
        parent = int(self.parent[node_id])
        return TreeNode(
            id=node_id,
            state=SystemState.from_vector(self.states[node_id], self.n_robots, self.n_objects),
            parent=None if parent < 0 else parent,
            incoming_action=self.action(node_id),
            depth=int(self.depth[node_id]),
            active=bool(self.active[node_id]),
        )

    def path_to_root(self, node_id: int) -> list[int]:
        """Node ids from the root to node_id."""
        ids = []
        current = node_id
        while current >= 0:
            ids.append(current)
            current = int(self.parent[current])
        return ids[::-1]

    def to_dict(self) -> dict:
        return {
            "root_stable_id": self.root_stable_id,
            "action_duration": self.action_duration,
            "stats": dict(self.stats),
            "nodes": [
                {
                    "id": i,
                    "parent": int(self.parent[i]) if self.parent[i] >= 0 else None,
                    "depth": int(self.depth[i]),
                    "active": bool(self.active[i]),
                    "action": self.actions[i].tolist() if self.parent[i] >= 0 else None,
                    "state": self.states[i].tolist(),
                }
                for i in range(self.size)
            ],
        }


@dataclass(frozen=True, eq=False)
class Path:
    """Root-to-leaf trajectory that ends within epsilon of a stable state."""
    states: np.ndarray             # (L, D) state vectors, root first
    actions: list[ActionCommand]   # L - 1 actions
    goal_id: int
    start_id: int
    node_ids: list[int] = field(default_factory=list)
    terminal_distance: float = 0.0

    def system_states(self, n_robots: int, n_objects: int) -> list[SystemState]:
        return [SystemState.from_vector(s, n_robots, n_objects) for s in self.states]

    def to_dict(self, n_robots: int, n_objects: int) -> dict:
        return {
            "start_id": self.start_id,
            "goal_id": self.goal_id,
            "terminal_distance": self.terminal_distance,
            "node_ids": list(self.node_ids),
            "actions": [a.to_dict() for a in self.actions],
            "states": [s.to_dict() for s in self.system_states(n_robots, n_objects)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Path":
        states = [SystemState.from_dict(s).to_vector() for s in data["states"]]
        return cls(
            states=np.array(states),
            actions=[ActionCommand.from_dict(a) for a in data["actions"]],
            goal_id=int(data["goal_id"]),
            start_id=int(data["start_id"]),
            node_ids=[int(i) for i in data.get("node_ids", [])],
            terminal_distance=float(data["terminal_distance"]),
        )
