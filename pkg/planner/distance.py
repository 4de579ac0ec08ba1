"""
Weighted state distance used by the planner, the path filter and the metrics.

    d^2(a, b) = w_obj * (sum ||dp||^2 + sum d_rot^2) + w_rob * ||dq||^2 + w_vel * ||d velocities||^2

with d_rot the geodesic angle between object orientations. sqrt(d^2) is a
metric on states.
"""

from dataclasses import dataclass

import numpy as np

from config.constants import EPSILON_FRACTION
from functions.errors import DimensionMismatchError
from physics.types import SceneSpec, SystemState
from planner.types import Weights


@dataclass(frozen=True)
class StateMetric:
    """Slices of the state vector and the weights."""
    n_robots: int
    n_objects: int
    weights: Weights

    @classmethod
    def for_scene(cls, scene: SceneSpec, weights: Weights) -> "StateMetric":
        return cls(scene.n_robots, scene.n_objects, weights)

    @property
    def dim(self) -> int:
        return 6 * self.n_robots + 13 * self.n_objects

    def _parts(self, x: np.ndarray):
        r3, o3, o4 = 3 * self.n_robots, 3 * self.n_objects, 4 * self.n_objects
        robot = x[..., :r3]
        velocity_robot = x[..., r3:2 * r3]
        pos = x[..., 2 * r3:2 * r3 + o3]
        quat = x[..., 2 * r3 + o3:2 * r3 + o3 + o4]
        velocity_object = x[..., 2 * r3 + o3 + o4:]
        return robot, velocity_robot, pos, quat, velocity_object

    def squared(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Squared weighted distance between broadcastable state-vector arrays."""
        if a.shape[-1] != self.dim or b.shape[-1] != self.dim:
            raise DimensionMismatchError(f"State vectors of size {a.shape[-1]} / {b.shape[-1]}, expected {self.dim}.")
        ra, rva, pa, qa, va = self._parts(a)
        rb, rvb, pb, qb, vb = self._parts(b)
        w = self.weights
        total = w.w_rob * np.sum((ra - rb) ** 2, axis=-1)
        total = total + w.w_vel * (np.sum((rva - rvb) ** 2, axis=-1) + np.sum((va - vb) ** 2, axis=-1))
        if self.n_objects:
            total = total + w.w_obj * np.sum((pa - pb) ** 2, axis=-1)
            qa = qa.reshape(qa.shape[:-1] + (self.n_objects, 4))
            qb = qb.reshape(qb.shape[:-1] + (self.n_objects, 4))
            inner = np.abs(np.sum(qa * qb, axis=-1))
            angle = 2.0 * np.arccos(np.minimum(1.0, inner))
            total = total + w.w_obj * np.sum(angle ** 2, axis=-1)
        return total

    def distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.sqrt(self.squared(a, b))

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """(len(a), len(b)) matrix of sqrt distances."""
        return self.distance(a[:, None, :], b[None, :, :])


def weighted_distance(a: SystemState, b: SystemState, weights: Weights) -> float:
    """
    Squared weighted distance between two states of the same scene.

    Raises:
        DimensionMismatchError: The states come from different scenes.
    """
    if a.n_robots != b.n_robots or a.n_objects != b.n_objects:
        raise DimensionMismatchError(
            f"States have {a.n_robots}/{a.n_objects} and {b.n_robots}/{b.n_objects} robots/objects.")
    metric = StateMetric(a.n_robots, a.n_objects, weights)
    return float(metric.squared(a.to_vector(), b.to_vector()))


def default_epsilon(scene: SceneSpec, weights: Weights, fraction: float = EPSILON_FRACTION) -> float:
    """Goal radius: a fraction of the scene diameter under the weighted metric."""
    low, high = scene.object_bounds()
    object_diag = float(np.sum((high - low) ** 2))
    robot_diag = sum(float(np.sum((np.array(r.high) - np.array(r.low)) ** 2)) for r in scene.robots)
    return fraction * float(np.sqrt(weights.w_obj * scene.n_objects * object_diag + weights.w_rob * robot_diag))
