"""
Evaluation metrics over planner output: path count, coverage of C_s,
Kozachenko-Leonenko entropy of the visited states and average same-goal
Hausdorff distance.
"""

from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np
from scipy.special import digamma, gammaln

from config.constants import ENTROPY_MIN_POOL, KL_K, KL_REPEATS, KL_SAMPLE_N
from functions.errors import DegenerateSampleError, InsufficientStatesError, ValidationError
from planner.distance import StateMetric
from planner.paths import euclidean_pairwise, hausdorff
from planner.registry import StableRegistry
from planner.types import Path, SearchTree
from stability.types import StableState



@dataclass
class MetricsReport:
    path_count: int
    coverage_pct: float
    entropy_nats: float | None = None
    avg_hausdorff: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(
            path_count=int(data["path_count"]),
            coverage_pct=float(data["coverage_pct"]),
            entropy_nats=data.get("entropy_nats"),
            avg_hausdorff=data.get("avg_hausdorff"),
            notes=list(data.get("notes", [])),
        )

    def to_row(self, scene: str, method: str, seed) -> dict:
        return {
            "scene": scene,
            "method": method,
            "seed": seed,
            "count": self.path_count,
            "coverage": self.coverage_pct,
            "entropy": self.entropy_nats,
            "avg_hausdorff": self.avg_hausdorff,
        }


def _percentage(reached: int, total: int) -> float:
    return 100.0 * reached / total if total else 0.0


def coverage(tree: SearchTree, stable_states: list[StableState], epsilon: float, metric: StateMetric) -> float:
    """Percentage of goals (C_s without the root's state) with a tree node strictly within epsilon."""
    goals = [i for i in range(len(stable_states)) if i != tree.root_stable_id]
    if not goals:
        return 0.0
    goal_vectors = np.array([stable_states[i].config.to_vector() for i in goals])
    reached = np.zeros(len(goals), dtype=bool)
    for start in range(0, tree.size, 4096):
        distances = metric.pairwise(tree.states[start:min(start + 4096, tree.size)], goal_vectors)
        reached |= np.any(distances < epsilon, axis=0)
    return _percentage(int(np.sum(reached)), len(goals))


def coverage_from_registry(registry: StableRegistry, epsilon: float) -> float:
    """Same percentage from the registry's best distances."""
    return _percentage(len(registry.coverage_ids(epsilon)), len(registry.goal_ids()))


def coverage_from_paths(paths: list[Path], m: int) -> float:
    """Same percentage from paths; equal to the tree value for extracted or filtered paths."""
    return _percentage(len({p.goal_id for p in paths}), m - 1)


def kl_entropy(states: np.ndarray, rng: np.random.Generator, sample_n: int = KL_SAMPLE_N, k: int = KL_K,
               repeats: int = KL_REPEATS,
               pairwise: Callable[[np.ndarray, np.ndarray], np.ndarray] = euclidean_pairwise) -> float:
    """
    Kozachenko-Leonenko entropy estimate in nats,

        H = psi(N) - psi(k) + log V_d + (d / N) * sum_i log eps_i

    with eps_i the distance to the k-th neighbor inside a subsample of N =
    sample_n states and V_d the unit-ball volume. Averaged over `repeats`
    subsamples drawn without replacement from the deduplicated pool.

    Raises:
        InsufficientStatesError: Fewer than sample_n distinct states.
        DegenerateSampleError: A k-th neighbor distance is zero.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    if not 1 <= k < sample_n:
        raise ValidationError(f"k must lie in 1..sample_n-1, got k={k}, sample_n={sample_n}.")
    pool = np.unique(states, axis=0)
    if pool.shape[0] < sample_n:
        raise InsufficientStatesError(f"Entropy needs {sample_n} distinct states, the pool has {pool.shape[0]}.")
    d = pool.shape[1]
    log_volume = 0.5 * d * np.log(np.pi) - gammaln(0.5 * d + 1.0)
    constant = digamma(sample_n) - digamma(k) + log_volume
    estimates = []
    for _ in range(repeats):
        sample = pool[rng.choice(pool.shape[0], size=sample_n, replace=False)]
        distances = pairwise(sample, sample)
        np.fill_diagonal(distances, np.inf)
        kth = np.sort(distances, axis=1)[:, k - 1]
        if np.any(kth <= 0.0):
            raise DegenerateSampleError("Zero k-th neighbor distance between distinct states.")
        estimates.append(constant + d * np.mean(np.log(kth)))
    return float(np.mean(estimates))


def _average_pairwise(groups: list[list], distance: Callable) -> float | None:
    means = []
    for group in groups:
        if len(group) < 2:
            continue
        means.append(np.mean([distance(p, q) for p, q in combinations(group, 2)]))
    return float(np.mean(means)) if means else None


def avg_hausdorff(paths: list[Path], metric: StateMetric) -> float | None:
    """Mean pairwise Hausdorff distance per goal with at least two paths, averaged over those goals."""
    by_goal: dict[int, list[Path]] = {}
    for path in paths:
        by_goal.setdefault(path.goal_id, []).append(path)
    return _average_pairwise([by_goal[g] for g in sorted(by_goal)], lambda p, q: hausdorff(p, q, metric))


def visited_pool(paths: list[Path]) -> np.ndarray:
    """States visited by the paths, each tree node once."""
    seen: dict[int, np.ndarray] = {}
    rows = []
    for path in paths:
        if path.node_ids:
            for node_id, state in zip(path.node_ids, path.states):
                seen.setdefault(node_id, state)
        else:
            rows.extend(path.states)
    rows.extend(seen[i] for i in sorted(seen))
    if not rows:
        return np.zeros((0, 0))
    return np.unique(np.array(rows), axis=0)


def evaluate_paths(paths: list[Path], m: int, metric: StateMetric, rng: np.random.Generator,
                   coverage_pct: float | None = None) -> MetricsReport:
    """
    MetricsReport of retained paths.

    Args:
        paths (list[Path]): Paths after the redundancy filter.
        m (int): |C_s|.
        metric (StateMetric): Metric for entropy and Hausdorff distances.
        rng (np.random.Generator): The entropy stream.
        coverage_pct (float | None): Coverage from the tree when available;
            computed from the paths otherwise.
    """
    notes = ["entropy and hausdorff use the weighted state metric"]
    if coverage_pct is None:
        coverage_pct = coverage_from_paths(paths, m)

    entropy = None
    pool = visited_pool(paths)
    if pool.shape[0] < ENTROPY_MIN_POOL:
        notes.append(f"entropy absent: {pool.shape[0]} visited states, need {ENTROPY_MIN_POOL}")
    else:
        try:
            entropy = kl_entropy(pool, rng, pairwise=metric.pairwise)
        except (DegenerateSampleError, InsufficientStatesError) as e:
            notes.append(f"entropy absent: {e}")

    spread = avg_hausdorff(paths, metric)
    if spread is None:
        notes.append("avg_hausdorff absent: no goal with two or more paths")
    return MetricsReport(path_count=len(paths), coverage_pct=coverage_pct, entropy_nats=entropy,
                         avg_hausdorff=spread, notes=notes)
