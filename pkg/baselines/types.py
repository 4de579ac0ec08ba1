"""
Domain types of the reference methods and the ablation grid.
"""

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from config.constants import GOAL_BIAS, PS_HORIZON, PS_ITERATIONS, PS_SAMPLES
from functions.errors import ValidationError
from metrics.metrics import MetricsReport
from physics.types import ActionCommand
from planner.registry import StableRegistry
from planner.types import Path, PlannerConfig, SearchTree

BASELINE_METHODS = ("rrt_sim", "predictive_sampling", "stage_variant")

# PlannerConfig fields a variant may override
_OVERRIDABLE = {
    "k", "n", "n_candidates", "node_rejection", "stable_sample_prob", "require_progress", "compare_to_best",
    "epsilon", "d_min", "w_obj", "w_rob", "w_vel", "action_duration", "progress_tol",
}


@dataclass(frozen=True)
class BaselineConfig:
    method: str = "rrt_sim"
    goal_bias: float = GOAL_BIAS
    variant_overrides: dict = field(default_factory=dict)
    ps_horizon: int = PS_HORIZON
    ps_iterations: int = PS_ITERATIONS
    ps_samples: int = PS_SAMPLES

    def validate(self) -> "BaselineConfig":
        if self.method not in BASELINE_METHODS:
            raise ValidationError(f"Unsupported baseline: {self.method}. Supported: {', '.join(BASELINE_METHODS)}")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValidationError(f"goal_bias must lie in [0, 1], got {self.goal_bias}.")
        if min(self.ps_horizon, self.ps_iterations, self.ps_samples) < 1:
            raise ValidationError("Predictive sampling horizon, iterations and samples must be positive.")
        unknown = set(self.variant_overrides) - _OVERRIDABLE
        if unknown:
            raise ValidationError(f"Unknown planner overrides: {sorted(unknown)}.")
        return self

    def apply(self, planner_config: PlannerConfig) -> PlannerConfig:
        """planner_config with the variant overrides applied."""
        self.validate()
        return replace(planner_config, **self.variant_overrides)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class RunResult:
    """Everything one (method, seed) cell produced."""
    method: str
    seed: int
    root_id: int
    paths: list[Path]
    report: MetricsReport
    extracted: int = 0
    budget: dict = field(default_factory=dict)
    tree: SearchTree | None = None
    registry: StableRegistry | None = None


@dataclass(eq=False)
class TrajectoryResult:
    """One predictive-sampling attempt from a start to a goal stable state."""
    start_id: int
    goal_id: int
    success: bool
    states: np.ndarray                      # (L, D), start first
    actions: list[ActionCommand]
    steps_used: int
    terminal_distance: float
    reason: str = ""

    def to_path(self) -> Path:
        return Path(states=self.states, actions=list(self.actions), goal_id=self.goal_id, start_id=self.start_id,
                    node_ids=[], terminal_distance=self.terminal_distance)
