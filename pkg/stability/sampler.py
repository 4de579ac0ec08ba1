"""
Stable-state sampling: project random configurations onto the stability
manifold and keep the ones that also hold still in simulation.
"""

from dataclasses import replace

import numpy as np

from config.constants import (
    ACTION_DURATION, HOLD_DRIFT_TOL, HOLD_SPEED_TOL, HOLD_TIME, MAX_ATTEMPTS_PER_STATE, SEPARATION_TOL,
)
from functions.errors import DivergedError, ExhaustedError, MaxIterationsError, ValidationError
from functions.helper_functions import RandomStreams, random_quaternion
from functions.logger import log_run_event
from physics.simulator import min_separation, rollout
from physics.types import ActionCommand, SceneSpec, SystemState
from stability.assignment import sample_contact_assignment
from stability.residuals import build_program, evaluate_residuals, initial_contact_vars, select_contacts
from stability.solver import solve_augmented_lagrangian
from stability.types import ContactAssignment, ContactVariable, SamplingStats, SolverSettings, StableState


def sample_x_bar(scene: SceneSpec, rng: np.random.Generator) -> SystemState:
    """Uniform robot positions within limits, uniform object positions in the scaled scene box, random box orientations."""
    robot_q = np.concatenate([rng.uniform(robot.low, robot.high) for robot in scene.robots])
    low, high = scene.object_bounds()
    positions, quats = [], []
    for obj in scene.objects:
        positions.append(rng.uniform(low, high))
        quats.append(random_quaternion(rng) if obj.shape == "box" else np.array([1.0, 0.0, 0.0, 0.0]))
    return SystemState.at_rest(robot_q, np.array(positions).reshape(-1, 3), np.array(quats).reshape(-1, 4))


def project_to_stable(x_bar: SystemState, assignment: ContactAssignment, scene: SceneSpec,
                      settings: SolverSettings | None = None,
                      warm_start: list[ContactVariable] | None = None) -> StableState:
    """
    Closest configuration to x_bar (in the least-squares sense) that is in
    quasi-static equilibrium under the assigned contacts.

    Args:
        x_bar (SystemState): Random initial configuration (velocities ignored).
        assignment (ContactAssignment): Active contact pairs.
        scene (SceneSpec): The scene.
        settings (SolverSettings | None): Augmented-Lagrangian schedule.
        warm_start (list[ContactVariable] | None): Initial contact points and
            forces; the closest-point cold start when None.

    Returns:
        StableState: With id -1; the sampler numbers accepted states.

    Raises:
        MaxIterationsError: The solver did not reach the tolerances.
    """
    settings = settings or SolverSettings()
    if not np.all(np.isfinite(x_bar.to_vector())):
        raise ValidationError("x_bar contains non-finite entries.")
    assignment.validate()
    x_bar = x_bar.with_zero_velocity()
    selection = select_contacts(x_bar, assignment, scene)
    program = build_program(scene)
    start_vars = warm_start if warm_start is not None else initial_contact_vars(x_bar, selection, scene)
    target = program.config_vector(x_bar)
    result = solve_augmented_lagrangian(program.bind(selection), program.pack(x_bar, start_vars, selection),
                                        target, settings)
    if not result.converged:
        raise MaxIterationsError(
            f"No stable state after {result.outer_iterations} outer iterations "
            f"(residual {result.residual_norm:.3e}, violation {result.max_violation:.3e}).",
            residual_norm=result.residual_norm,
            max_violation=result.max_violation,
        )
    config, contact_vars = program.unpack(result.z, selection)
    residuals = evaluate_residuals(config, contact_vars, assignment, scene, selection)
    if residuals.equality_norm > settings.eq_tol or residuals.max_violation > settings.ineq_tol:
        raise MaxIterationsError(
            "Solution left the tolerances after renormalizing orientations.",
            residual_norm=residuals.equality_norm,
            max_violation=residuals.max_violation,
        )
    return StableState(config=config, assignment=assignment, contact_vars=contact_vars,
                       residual_norm=residuals.equality_norm, id=-1)


def validate_stability(state: StableState, scene: SceneSpec, hold_time: float = HOLD_TIME,
                       tol: float = HOLD_DRIFT_TOL, speed_tol: float = HOLD_SPEED_TOL) -> bool:
    """
    Hold the state with zero robot command for `hold_time` seconds.

    Returns:
        bool: True iff every object stays within `tol` of its start at each
        checkpoint and ends slower than `speed_tol`. Divergence counts as False.
    """
    chunks = int(round(hold_time / ACTION_DURATION))
    if chunks >= 1 and abs(chunks * ACTION_DURATION - hold_time) < 1e-9:
        actions = [ActionCommand.zero(scene, ACTION_DURATION)] * chunks
    else:
        actions = [ActionCommand.zero(scene, hold_time)]
    start = state.config.with_zero_velocity()
    try:
        states = rollout(start, actions, scene)
    except (DivergedError, ValidationError):
        return False
    for held in states:
        drift = np.sqrt(np.sum((held.object_pos - start.object_pos) ** 2, axis=1))
        if np.any(drift >= tol):
            return False
    speed = np.sqrt(np.sum(states[-1].object_vel ** 2, axis=1))
    return bool(np.all(speed < speed_tol))


def sample_stable_states_with_stats(m: int, scene: SceneSpec, streams: RandomStreams,
                                    max_attempts_per_state: int = MAX_ATTEMPTS_PER_STATE,
                                    settings: SolverSettings | None = None) -> tuple[list[StableState], SamplingStats]:
    """
    Sample C_s: m validated stable states, numbered 0..m-1.

    Each attempt draws a fresh assignment and a fresh x_bar.

    Raises:
        ValidationError: m < 1 or max_attempts_per_state < 1.
        ExhaustedError: State i was not found within the attempt budget.
    """
    if m < 1:
        raise ValidationError(f"Number of stable states must be at least 1, got {m}.")
    if max_attempts_per_state < 1:
        raise ValidationError(f"max_attempts_per_state must be at least 1, got {max_attempts_per_state}.")
    settings = settings or SolverSettings()
    stats = SamplingStats()
    states: list[StableState] = []
    for index in range(m):
        for attempt in range(1, max_attempts_per_state + 1):
            assignment = sample_contact_assignment(scene, streams.assignment)
            x_bar = sample_x_bar(scene, streams.x_bar)
            try:
                candidate = project_to_stable(x_bar, assignment, scene, settings)
            except MaxIterationsError as e:
                stats.solver_failures += 1
                log_run_event("STABLE_FAIL", scene=scene.name, method="sample", seed=streams.seed,
                              index=index, attempt=attempt, reason=str(e))
                continue
            if min_separation(candidate.config, scene) < -SEPARATION_TOL or not validate_stability(candidate, scene):
                stats.validation_failures += 1
                log_run_event("STABLE_FAIL", scene=scene.name, method="sample", seed=streams.seed,
                              index=index, attempt=attempt, reason="hold test failed")
                continue
            states.append(replace(candidate, id=index))
            stats.attempts.append(attempt)
            log_run_event("STABLE_OK", scene=scene.name, method="sample", seed=streams.seed,
                          index=index, attempts=attempt, contacts=assignment.to_list(),
                          residual=f"{candidate.residual_norm:.2e}")
            break
        else:
            raise ExhaustedError(
                f"Stable state {index} not found within {max_attempts_per_state} attempts in scene '{scene.name}'.",
                index=index,
            )
    return states, stats


def sample_stable_states(m: int, max_attempts_per_state: int, scene: SceneSpec,
                         streams: RandomStreams, settings: SolverSettings | None = None) -> list[StableState]:
    states, _ = sample_stable_states_with_stats(m, scene, streams, max_attempts_per_state, settings)
    return states
