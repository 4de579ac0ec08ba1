"""
Tests for the simulator: worked examples, determinism, clamping, energy and
contact diagnostics.

Run: uv run pytest unit_tests/test_physics.py
  or uv run python unit_tests/test_physics.py
"""

import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from functions.errors import InvalidStateError, ValidationError
from physics.scenes import available_scenes, get_scene
from physics.simulator import contact_report, min_separation, rollout, rollout_candidates, step
from physics.types import ActionCommand, SceneSpec, SystemState, clamp_speeds
from unit_tests.helpers import NO_SURFACE_SCENE, TWO_SPHERES_SCENE, floor_scene, sphere_on_floor


def test_builtin_scenes_load():
    assert available_scenes() == ["spheres_cube", "spheres_ramp"]
    ramp = get_scene("spheres_ramp")
    cube = get_scene("spheres_cube")
    assert (ramp.n_robots, ramp.n_objects) == (1, 1)
    assert (cube.n_robots, cube.n_objects) == (2, 1)
    assert cube.objects[0].shape == "box"
    assert ramp.state_dim == 6 + 13


def test_unknown_scene_is_rejected():
    with pytest.raises(ValidationError):
        get_scene("no_such_scene")


@pytest.mark.parametrize("changes", [
    {"static_surfaces": [{"name": "floor", "normal": [0.0, 0.0, 2.0], "offset": 0.0}]},
    {"static_surfaces": [{"name": "robot0", "normal": [0.0, 0.0, 1.0], "offset": 0.0}]},
    {"robots": [{"radius": 0.05, "position_limits": {"low": [1.0, -1.0, 0.0], "high": [-1.0, 1.0, 1.0]},
                 "max_speed": 0.5}]},
    {"objects": [{"shape": "cone", "mass": 1.0}]},
    {"static_surfaces": [{"name": "floor", "normal": [0.0, 0.0, 1.0], "offset": 0.0,
                          "extent": {"low": [1.0, None, None], "high": [0.0, None, None]}}]},
    {"dt": 0.0},
])
def test_invalid_scene_documents_are_rejected(changes):
    with pytest.raises(ValidationError):
        get_scene({**TWO_SPHERES_SCENE, **changes})


def test_scene_document_round_trip_keeps_extents():
    ramp = get_scene("spheres_ramp")
    assert [s.name for s in ramp.static_surfaces] == ["ramp", "ramp_end", "pit", "wall_left", "wall_right"]
    assert ramp.static_surfaces[0].high[0] == 0.35 and not ramp.static_surfaces[3].bounded
    assert SceneSpec.from_dict(ramp.to_dict(), name="spheres_ramp") == ramp


def _on_ramp(x: float, scene) -> list[float]:
    """Center of the sphere object resting on the ramp with its contact point at height-line x."""
    normal = np.array(scene.static_surfaces[0].normal)
    foot = np.array([x, 0.0, -x * normal[0] / normal[2]])
    return list(foot + scene.objects[0].radius * normal)


def test_sphere_rolls_off_the_ramp_into_the_pit():
    scene = get_scene("spheres_ramp")
    start = SystemState.at_rest(np.array([-0.4, 0.0, 0.25]), [_on_ramp(0.3, scene)])
    end = rollout(start, [ActionCommand.zero(scene, 0.25)] * 12, scene)[-1]
    assert end.object_pos[0, 0] > 0.35
    assert end.object_pos[0, 2] == pytest.approx(-0.3 + scene.objects[0].radius, abs=5e-3)
    # out of reach: the lowest robot surface stays above the top of the sphere
    lowest_robot = scene.robots[0].low[2] - scene.robots[0].radius
    assert lowest_robot > end.object_pos[0, 2] + scene.objects[0].radius


def test_ramp_plane_ignored_beyond_its_end():
    scene = get_scene("spheres_ramp")
    in_pit = SystemState.at_rest(np.array([0.0, 0.0, 0.2]), [[0.5, 0.0, -0.249]])
    assert min_separation(in_pit, scene) == pytest.approx(0.001, abs=1e-9)
    assert contact_report(in_pit, scene).pairs == []


def test_free_fall_one_substep():
    scene = floor_scene()
    state = SystemState.at_rest(np.array([0.6, 0.6, 0.5]), [[0.0, 0.0, 1.0]])
    after = step(state, ActionCommand.zero(scene, scene.dt), scene)
    assert after.object_vel[0, 2] == pytest.approx(-0.0981, abs=1e-12)
    assert 1.0 - after.object_pos[0, 2] == pytest.approx(0.000981, abs=1e-12)


def test_resting_sphere_holds_at_penalty_equilibrium():
    scene = floor_scene()
    sag = 1.0 * scene.gravity / scene.contact_stiffness
    state = SystemState.at_rest(np.array([0.6, 0.6, 0.5]), [[0.0, 0.0, 0.1 - sag]])
    after = step(state, ActionCommand.zero(scene, 100 * scene.dt), scene)
    drift = np.linalg.norm(after.object_pos[0] - state.object_pos[0])
    assert drift < 1e-3


def test_robot_stays_within_limits_when_pushed_into_wall():
    scene = floor_scene()
    state = SystemState.at_rest(np.array([0.95, 0.0, 0.5]), [[0.0, 0.0, 0.1]])
    action = ActionCommand(robot_target_vel=np.array([[5.0, 0.0, 0.0]]), duration=1.0)
    after = step(state, action, scene)
    assert after.robot_q[0] <= 1.0
    assert after.robot_q[0] == pytest.approx(1.0)
    assert np.linalg.norm(after.robot_v) <= scene.robots[0].max_speed * (1 + 1e-9)


def test_clamp_soundness_random():
    scene = floor_scene()
    rng = np.random.default_rng(3)
    low, high = np.array(scene.robots[0].low), np.array(scene.robots[0].high)
    for _ in range(20):
        robot = rng.uniform(low, high)
        robot[2] = max(robot[2], 0.4)
        state = SystemState.at_rest(robot, [[rng.uniform(-0.5, 0.5), 0.0, 0.1]])
        action = ActionCommand(robot_target_vel=rng.normal(scale=2.0, size=(1, 3)), duration=0.25)
        after = step(state, action, scene)
        assert np.all(after.robot_q >= low) and np.all(after.robot_q <= high)
        assert np.linalg.norm(after.robot_v) <= scene.robots[0].max_speed * (1 + 1e-9)


def test_clamp_speeds_scales_only_fast_commands():
    scene = floor_scene()
    velocities = np.array([[[0.3, 0.0, 0.0]], [[3.0, 4.0, 0.0]]])
    clamped = clamp_speeds(velocities, scene)
    assert np.array_equal(clamped[0], velocities[0])
    assert np.linalg.norm(clamped[1]) == pytest.approx(0.5)


def test_step_is_deterministic():
    scene = get_scene("spheres_cube")
    state = SystemState.at_rest(np.array([-0.1, 0.0, 0.05, 0.3, 0.0, 0.3]), [[0.0, 0.0, 0.05]])
    action = ActionCommand(robot_target_vel=np.array([[0.4, 0.0, 0.0], [0.0, 0.2, 0.0]]), duration=0.25)
    first = step(state, action, scene).to_vector()
    second = step(state, action, scene).to_vector()
    assert np.array_equal(first, second)


def test_rollout_equals_folded_step():
    scene = floor_scene()
    state = sphere_on_floor(robot=(-0.3, 0.0, 0.1))
    a = ActionCommand(robot_target_vel=np.array([[0.5, 0.0, 0.0]]), duration=0.25)
    b = ActionCommand(robot_target_vel=np.array([[0.0, 0.3, 0.0]]), duration=0.5)
    states = rollout(state, [a, b], scene)
    first = step(state, a, scene)
    assert np.array_equal(states[0].to_vector(), first.to_vector())
    assert np.array_equal(states[1].to_vector(), step(first, b, scene).to_vector())
    single = rollout(state, [a], scene)
    assert len(single) == 1 and np.array_equal(single[0].to_vector(), first.to_vector())


def test_random_rollout_twice_identical():
    scene = get_scene("spheres_ramp")
    rng = np.random.default_rng(11)
    actions = [ActionCommand.clamped(rng.normal(size=3), 0.25, scene) for _ in range(50)]
    start = SystemState.at_rest(np.array([0.0, 0.0, 0.15]), [[0.1, 0.0, 0.3]])
    first = rollout(start, actions, scene)
    second = rollout(start, actions, scene)
    assert all(np.array_equal(x.to_vector(), y.to_vector()) for x, y in zip(first, second))


def test_rollout_rejects_empty_sequence():
    scene = floor_scene()
    with pytest.raises(ValueError):
        rollout(sphere_on_floor(), [], scene)


def test_batched_candidates_match_single_rollouts():
    scene = get_scene("spheres_cube")
    start = SystemState.at_rest(np.array([-0.1, 0.0, 0.05, 0.1, 0.05, 0.05]), [[0.0, 0.0, 0.05]]).to_vector()
    rng = np.random.default_rng(5)
    velocities = clamp_speeds(rng.normal(scale=0.4, size=(8, 2, 3)), scene)
    ends, flags = rollout_candidates(start, velocities, 25, scene)
    assert not flags.any()
    for i in range(8):
        alone, _ = rollout_candidates(start, velocities[i:i + 1], 25, scene)
        assert np.array_equal(alone[0], ends[i])
        via_step = step(SystemState.from_vector(start, 2, 1),
                        ActionCommand(robot_target_vel=velocities[i], duration=0.25), scene)
        assert np.array_equal(via_step.to_vector(), ends[i])


def test_energy_non_increasing_in_free_flight():
    scene = get_scene(NO_SURFACE_SCENE)
    mass = scene.objects[0].mass
    state = SystemState.at_rest(np.array([0.9, 0.9, 0.9]), [[0.0, 0.0, 0.0]])
    states = rollout(state, [ActionCommand.zero(scene, scene.dt)] * 60, scene)

    def energy(s):
        return 0.5 * mass * float(np.sum(s.object_vel ** 2)) + mass * scene.gravity * float(s.object_pos[0, 2])

    energies = [energy(s) for s in states]
    for before, after in zip(energies, energies[1:]):
        assert after <= before + 1e-6 * max(abs(before), 1.0)


def test_min_separation_examples():
    scene = floor_scene()
    assert min_separation(sphere_on_floor(), scene) == pytest.approx(0.0, abs=1e-12)
    raised = SystemState.at_rest(np.array([0.6, 0.6, 0.5]), [[0.0, 0.0, 0.3]])
    assert min_separation(raised, scene) == pytest.approx(0.2)

    spheres = get_scene(TWO_SPHERES_SCENE)
    overlap = SystemState.at_rest(np.array([0.9, 0.9, 0.9]), [[0.0, 0.0, 0.5], [0.15, 0.0, 0.5]])
    assert min_separation(overlap, spheres) == pytest.approx(-0.05)


def test_contact_report_forces_point_along_normals():
    scene = floor_scene()
    pressed = SystemState.at_rest(np.array([0.6, 0.6, 0.5]), [[0.0, 0.0, 0.099]])
    pressed = SystemState(pressed.robot_q, pressed.robot_v, pressed.object_pos, pressed.object_quat,
                          np.array([[0.2, 0.0, -0.1]]), pressed.object_omega)
    report = contact_report(pressed, scene)
    assert len(report.pairs) == 1
    pair = report.pairs[0]
    assert (pair.body_a, pair.body_b) == ("object0", "floor")
    assert pair.penetration == pytest.approx(0.001)
    assert np.linalg.norm(pair.normal) == pytest.approx(1.0)
    assert float(np.dot(pair.force, pair.normal)) >= 0.0


def test_non_finite_state_is_rejected():
    scene = floor_scene()
    bad = SystemState.at_rest(np.array([0.6, 0.6, np.nan]), [[0.0, 0.0, 0.1]])
    with pytest.raises(InvalidStateError):
        step(bad, ActionCommand.zero(scene, 0.25), scene)


def test_action_duration_must_be_multiple_of_dt():
    scene = floor_scene()
    with pytest.raises(ValidationError):
        step(sphere_on_floor(), ActionCommand.zero(scene, 0.015), scene)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
