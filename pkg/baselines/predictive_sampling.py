"""
Predictive sampling: receding-horizon control that keeps the best of several
Gaussian perturbations of a nominal action plan.

The simulator-step budget of one attempt is the step count of one tree run
divided by the number of (start, goal) pairs tried.
"""

import numpy as np

from functions.errors import BudgetExhaustedError, ValidationError
from functions.helper_functions import RandomStreams
from functions.logger import log_run_event
from metrics.metrics import evaluate_paths
from physics.simulator import rollout_plans
from physics.types import ActionCommand, SceneSpec, clamp_speeds
from planner.distance import StateMetric
from planner.paths import remove_redundant
from planner.types import PlannerConfig
from stability.types import StableState

from .types import BaselineConfig, RunResult, TrajectoryResult


def ps_step_budget(config: PlannerConfig, m: int, scene: SceneSpec) -> int:
    """Simulator steps per pair: n_max * n_candidates * substeps / (m - 1)."""
    n_substeps = ActionCommand(robot_target_vel=np.zeros((scene.n_robots, 3)),
                               duration=config.action_duration).n_substeps(scene.dt)
    return int(config.n_max * config.n_candidates * n_substeps // max(1, m - 1))


class _Controller:
    """Nominal plan and the sampling step around it."""

    def __init__(self, baseline: BaselineConfig, scene: SceneSpec, metric: StateMetric, goal: np.ndarray,
                 n_substeps: int, rng: np.random.Generator):
        self.baseline = baseline
        self.scene = scene
        self.metric = metric
        self.goal = goal
        self.n_substeps = n_substeps
        self.rng = rng
        self.sigma = np.array([robot.max_speed / 2.0 for robot in scene.robots])
        self.plan = np.zeros((baseline.ps_horizon, scene.n_robots, 3))

    @property
    def steps_per_control(self) -> int:
        b = self.baseline
        return b.ps_iterations * b.ps_samples * b.ps_horizon * self.n_substeps

    def improve(self, current: np.ndarray) -> np.ndarray | None:
        """
        Run the sampling iterations from `current`. Returns the state after the
        first action of the chosen plan, or None if every sample diverged.
        """
        b = self.baseline
        first_state = None
        for _ in range(b.ps_iterations):
            noise = self.rng.normal(size=(b.ps_samples - 1,) + self.plan.shape) * self.sigma[None, None, :, None]
            # sample 0 is the nominal plan itself
            plans = np.concatenate([self.plan[None], clamp_speeds(self.plan[None] + noise, self.scene)])
            ends, diverged = rollout_plans(current, plans, self.n_substeps, self.scene)
            costs = np.where(diverged, np.inf, self.metric.squared(ends[:, -1], self.goal))
            if not np.any(np.isfinite(costs)):
                continue
            best = int(np.argmin(costs))
            self.plan = plans[best]
            first_state = ends[best, 0]
        return first_state

    def shift(self):
        self.plan = np.concatenate([self.plan[1:], np.zeros((1,) + self.plan.shape[1:])])


def run_predictive_sampling(config: BaselineConfig, planner_config: PlannerConfig, start: StableState,
                            goal: StableState, scene: SceneSpec, rng: np.random.Generator,
                            step_budget: int) -> TrajectoryResult:
    """
    Drive the system from `start` toward `goal` until it is within epsilon or
    the step budget runs out.

    Args:
        config (BaselineConfig): Horizon, iterations and samples.
        planner_config (PlannerConfig): Supplies epsilon, weights and action duration.
        start (StableState): Start state; velocities are zeroed.
        goal (StableState): Goal state.
        scene (SceneSpec): The scene.
        rng (np.random.Generator): The ps stream.
        step_budget (int): Simulator steps this attempt may use.

    Returns:
        TrajectoryResult: success flag, visited states and applied actions.
    """
    config.validate()
    if step_budget < 0:
        raise ValidationError(f"step_budget must be non-negative, got {step_budget}.")
    metric = StateMetric.for_scene(scene, planner_config.weights)
    goal_vec = goal.config.to_vector()
    current = start.config.with_zero_velocity().to_vector()
    states = [current]
    actions: list[ActionCommand] = []
    distance = float(metric.distance(current, goal_vec))

    def result(success: bool, steps: int, reason: str = "") -> TrajectoryResult:
        return TrajectoryResult(start_id=start.id, goal_id=goal.id, success=success, states=np.array(states),
                                actions=actions, steps_used=steps, terminal_distance=distance, reason=reason)

    if start.id == goal.id or distance < planner_config.epsilon:
        return result(True, 0)

    n_substeps = ActionCommand(robot_target_vel=np.zeros((scene.n_robots, 3)),
                               duration=planner_config.action_duration).n_substeps(scene.dt)
    controller = _Controller(config, scene, metric, goal_vec, n_substeps, rng)
    steps = 0
    try:
        while True:
            if steps + controller.steps_per_control > step_budget:
                raise BudgetExhaustedError(f"Goal {goal.id} not reached within {step_budget} simulator steps.")
            steps += controller.steps_per_control
            next_state = controller.improve(current)
            if next_state is None:
                return result(False, steps, "every sampled plan diverged")
            actions.append(ActionCommand(robot_target_vel=controller.plan[0].copy(),
                                         duration=planner_config.action_duration))
            current = next_state
            states.append(current)
            distance = float(metric.distance(current, goal_vec))
            if distance < planner_config.epsilon:
                return result(True, steps)
            controller.shift()
    except BudgetExhaustedError as e:
        return result(False, steps, str(e))


def run_predictive_sampling_all(config: BaselineConfig, planner_config: PlannerConfig,
                                stable_states: list[StableState], scene: SceneSpec, streams: RandomStreams,
                                method: str = "predictive_sampling") -> RunResult:
    """
    Attempt every goal of C_s from the seed's root state. Successful
    trajectories become paths; coverage is the per-pair success rate.
    """
    m = len(stable_states)
    if m < 2:
        raise ValidationError(f"Predictive sampling needs at least two stable states, got {m}.")
    metric = StateMetric.for_scene(scene, planner_config.weights)
    root_id = int(streams.root.integers(m))
    per_pair = ps_step_budget(planner_config, m, scene)
    log_run_event("START", scene=scene.name, method=method, seed=planner_config.seed,
                  stable_states=m, root=root_id, steps_per_pair=per_pair)

    paths = []
    used = 0
    for goal_id in range(m):
        if goal_id == root_id:
            continue
        attempt = run_predictive_sampling(config, planner_config, stable_states[root_id], stable_states[goal_id],
                                          scene, streams.ps, per_pair)
        used += attempt.steps_used
        if attempt.success:
            paths.append(attempt.to_path())
        else:
            log_run_event("WARNING", scene=scene.name, method=method, seed=planner_config.seed,
                          goal=goal_id, reason=attempt.reason)

    retained = remove_redundant(paths, planner_config.d_min, streams.shuffle, metric)
    log_run_event("PATHS", scene=scene.name, method=method, seed=planner_config.seed,
                  extracted=len(paths), retained=len(retained))
    report = evaluate_paths(retained, m, metric, streams.entropy)
    report.notes.append(f"per-pair success rate {len(paths)}/{m - 1}")
    log_run_event("METRICS", scene=scene.name, method=method, seed=planner_config.seed, **report.to_dict())

    budget = {"pairs": m - 1, "sim_steps": used, "sim_steps_cap": per_pair * (m - 1)}
    log_run_event("BUDGET", scene=scene.name, method=method, seed=planner_config.seed, **budget)
    return RunResult(method=method, seed=planner_config.seed, root_id=root_id, paths=retained, report=report,
                     extracted=len(paths), budget=budget)
