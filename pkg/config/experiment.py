"""
Experiment configuration: one document gathering the scene, the method, the
planner parameters, the seeds and the outputs of a run.

YAML files are read with yaml.safe_load and JSON files with json. A
`.meta.json` sidecar written by a previous run is accepted too; its embedded
`config` is used.
"""

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from config.constants import (
    ACTION_DURATION, GOAL_BIAS, K_NEAREST, M_STABLE, MAX_ATTEMPTS_PER_STATE, N_BEST, N_CANDIDATES, N_MAX,
    PROGRESS_TOL, PS_HORIZON, PS_ITERATIONS, PS_SAMPLES, W_OBJ, W_ROB, W_VEL,
)
from config.paths import DEFAULT_WORKERS, OUTPUT_PATH
from functions.errors import ValidationError

TREE_METHODS = ("stage", "no_rejection", "no_n_best", "no_knn", "uniform_80", "rrt_sim")
METHODS = TREE_METHODS + ("predictive_sampling",)
EMIT_FLAGS = ("paths", "tree", "metrics", "adjacency")


@dataclass(frozen=True)
class ExperimentConfig:
    scene: str | dict = "spheres_ramp"
    method: str = "stage"
    m: int = M_STABLE
    n_max: int | None = None
    k: int = K_NEAREST
    n: int = N_BEST
    n_candidates: int = N_CANDIDATES
    epsilon: float | None = None
    d_min: float | None = None
    w_obj: float = W_OBJ
    w_rob: float = W_ROB
    w_vel: float = W_VEL
    stable_sample_prob: float = 1.0
    node_rejection: bool = True
    compare_to_best: bool = False
    action_duration: float = ACTION_DURATION
    progress_tol: float = PROGRESS_TOL
    goal_bias: float = GOAL_BIAS
    ps_horizon: int = PS_HORIZON
    ps_iterations: int = PS_ITERATIONS
    ps_samples: int = PS_SAMPLES
    max_attempts_per_state: int = MAX_ATTEMPTS_PER_STATE
    stable_seed: int = 0
    stable_states_file: str | None = None
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    sweeps: list[str] = field(default_factory=list)
    stable_sizes: list[int] = field(default_factory=list)
    output_dir: str = str(OUTPUT_PATH)
    emit: list[str] = field(default_factory=lambda: ["paths", "metrics"])
    workers: int = DEFAULT_WORKERS

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"Unknown experiment fields: {sorted(unknown)}.")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        """
        Load a YAML/JSON config or a `.meta.json` sidecar.

        Raises:
            ValidationError: The file is missing or not a mapping.
        """
        path = Path(path)
        if not path.exists():
            raise ValidationError(f"Config file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f) if path.suffix == ".json" else yaml.safe_load(f)
        if not isinstance(document, dict):
            raise ValidationError(f"Config file {path} must hold a mapping.")
        if path.name.endswith(".meta.json") and "config" in document:
            document = document["config"]
        return cls.from_dict(document)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Explicit values win; None means 'not given'."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def scene_spec(self):
        from physics.scenes import get_scene
        return get_scene(self.scene)

    def resolve(self) -> "ExperimentConfig":
        """
        Fill unset values and check the invariants. The scene is embedded as a
        document so the result is self-contained.

        Raises:
            ValidationError: On any invalid value.
        """
        from planner.distance import default_epsilon
        from planner.types import Weights

        scene = self.scene_spec()
        epsilon = self.epsilon if self.epsilon is not None else default_epsilon(
            scene, Weights(self.w_obj, self.w_rob, self.w_vel))
        resolved = replace(
            self,
            scene=scene.to_dict(),
            n_max=N_MAX if self.n_max is None else self.n_max,
            epsilon=epsilon,
            d_min=epsilon if self.d_min is None else self.d_min,
            seeds=[int(s) for s in self.seeds],
            sweeps=list(self.sweeps),
            stable_sizes=[int(s) for s in self.stable_sizes],
            emit=list(self.emit),
        )
        return resolved.validate()

    def validate(self) -> "ExperimentConfig":
        if self.method not in METHODS:
            raise ValidationError(f"Unsupported method: {self.method}. Supported: {', '.join(METHODS)}")
        if self.m < 1:
            raise ValidationError(f"m must be at least 1, got {self.m}.")
        if not self.seeds:
            raise ValidationError("At least one seed is required.")
        if any(s < 0 for s in self.seeds) or self.stable_seed < 0:
            raise ValidationError("Seeds must be non-negative.")
        if self.n_max is not None and self.n_max < 0:
            raise ValidationError(f"n_max must be non-negative, got {self.n_max}.")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}.")
        if self.d_min is not None and self.d_min <= 0:
            raise ValidationError(f"d_min must be positive, got {self.d_min}.")
        if self.workers < 1:
            raise ValidationError(f"workers must be at least 1, got {self.workers}.")
        bad_emit = set(self.emit) - set(EMIT_FLAGS)
        if bad_emit:
            raise ValidationError(f"Unsupported emit flags: {sorted(bad_emit)}. Supported: {', '.join(EMIT_FLAGS)}")
        if self.epsilon is not None and self.d_min is not None:
            self.planner_config(self.seeds[0]).validate()
        self.baseline_config().validate()
        return self

    def planner_config(self, seed: int):
        """PlannerConfig of `method` for one seed (epsilon and d_min must be resolved)."""
        from baselines.ablation import VARIANTS, variant_config
        from baselines.rrt_sim import rrt_sim_config
        from planner.types import PlannerConfig

        base = PlannerConfig(
            n_max=N_MAX if self.n_max is None else self.n_max,
            m=self.m,
            k=self.k,
            n=self.n,
            n_candidates=self.n_candidates,
            epsilon=self.epsilon or 0.0,
            d_min=self.d_min or 0.0,
            w_obj=self.w_obj,
            w_rob=self.w_rob,
            w_vel=self.w_vel,
            stable_sample_prob=self.stable_sample_prob,
            node_rejection=self.node_rejection,
            seed=seed,
            compare_to_best=self.compare_to_best,
            action_duration=self.action_duration,
            progress_tol=self.progress_tol,
        )
        if self.method in VARIANTS:
            return variant_config(base, self.method)
        if self.method == "rrt_sim":
            return rrt_sim_config(base, self.baseline_config())
        return base

    def baseline_config(self):
        from baselines.types import BaselineConfig

        method = self.method if self.method in ("rrt_sim", "predictive_sampling") else "stage_variant"
        return BaselineConfig(method=method, goal_bias=self.goal_bias, ps_horizon=self.ps_horizon,
                              ps_iterations=self.ps_iterations, ps_samples=self.ps_samples)

    @property
    def scene_name(self) -> str:
        if isinstance(self.scene, dict):
            return self.scene.get("name", "inline")
        return Path(self.scene).stem if Path(self.scene).suffix else self.scene

    def to_dict(self) -> dict:
        return asdict(self)
