"""
Deterministic rigid-body simulator for sphere robots and sphere/box objects.

Robots are kinematic: they follow the commanded velocity, stopped per axis at
their position limits, and do not collide with static surfaces. Objects are
integrated with semi-implicit Euler under gravity, penalty normal forces
(spring-damper, clamped at zero) and a Coulomb friction clamp solved with a
few Jacobi sweeps on the tangential impulse.

Every rollout kernel works on a batch axis and uses only elementwise operations
and left-to-right sums, so a rollout gives bit-identical results whether it is
simulated alone or inside a batch of candidates.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from config.constants import DIVERGENCE_LIMIT, FRICTION_ITERATIONS
from functions.errors import DimensionMismatchError, DivergedError, InvalidStateError
from functions.helper_functions import ordered_sum
from physics.geometry import (
    BOX_CORNER_SIGNS, box_closest, cross3, dot3, integrate_quat, quat_rotate, quat_rotate_inv, safe_unit,
)
from physics.types import ActionCommand, ContactPair, ContactReport, SceneSpec, SystemState

_UP = np.array([0.0, 0.0, 1.0])


class Batch(NamedTuple):
    """Batched state arrays, leading axis = rollout."""
    robot_q: np.ndarray       # (B, R, 3)
    robot_v: np.ndarray       # (B, R, 3)
    object_pos: np.ndarray    # (B, O, 3)
    object_quat: np.ndarray   # (B, O, 4)
    object_vel: np.ndarray    # (B, O, 3)
    object_omega: np.ndarray  # (B, O, 3)


class Contacts(NamedTuple):
    distance: np.ndarray  # (B, C) signed, negative = penetration
    normal: np.ndarray    # (B, C, 3) direction of the force on object a
    point: np.ndarray     # (B, C, 3)
    lever_a: np.ndarray   # (B, C, 3) contact point relative to object a
    lever_b: np.ndarray   # (B, C, 3) relative to object b, zero when b is not an object


@dataclass(frozen=True, eq=False)
class CompiledScene:
    """Array form of a SceneSpec plus the static table of contact slots."""
    scene: SceneSpec
    normals: np.ndarray
    offsets: np.ndarray
    surface_low: np.ndarray   # (S, 3) extent of each surface
    surface_high: np.ndarray
    robot_radius: np.ndarray
    low: np.ndarray
    high: np.ndarray
    max_speed: np.ndarray
    inv_mass: np.ndarray
    inv_inertia: np.ndarray
    radius: np.ndarray
    half: np.ndarray
    is_box: np.ndarray
    groups: tuple           # (kind, a, b) per contact group
    obj_a: np.ndarray       # (C,)
    obj_b: np.ndarray       # (C,) -1 when b is a surface or a robot
    robot: np.ndarray       # (C,) -1 when b is not a robot
    body_b: tuple[str, ...]  # id of body b per slot
    gravity: np.ndarray


@lru_cache(maxsize=32)
def compile_scene(scene: SceneSpec) -> CompiledScene:
    groups = []
    obj_a, obj_b, robot, body_b = [], [], [], []

    def add(kind, a, b, size, b_object=-1, b_robot=-1, b_id=""):
        groups.append((kind, a, b))
        obj_a.extend([a] * size)
        obj_b.extend([b_object] * size)
        robot.extend([b_robot] * size)
        body_b.extend([b_id] * size)

    for i, obj in enumerate(scene.objects):
        for s, surface in enumerate(scene.static_surfaces):
            if obj.shape == "sphere":
                add("sphere_surface", i, s, 1, b_id=surface.name)
            else:
                add("box_surface", i, s, len(BOX_CORNER_SIGNS), b_id=surface.name)
        for r in range(scene.n_robots):
            add(f"{obj.shape}_robot", i, r, 1, b_robot=r, b_id=scene.robot_id(r))
        for j in range(i + 1, scene.n_objects):
            other = scene.objects[j]
            add(f"{obj.shape}_{other.shape}", i, j, 1, b_object=j, b_id=scene.object_id(j))

    inertia = np.array([obj.inertia for obj in scene.objects]).reshape(-1, 3)
    return CompiledScene(
        scene=scene,
        normals=np.array([s.normal for s in scene.static_surfaces], dtype=float).reshape(-1, 3),
        offsets=np.array([s.offset for s in scene.static_surfaces], dtype=float),
        surface_low=np.array([s.low for s in scene.static_surfaces], dtype=float).reshape(-1, 3),
        surface_high=np.array([s.high for s in scene.static_surfaces], dtype=float).reshape(-1, 3),
        robot_radius=np.array([r.radius for r in scene.robots]),
        low=np.array([r.low for r in scene.robots], dtype=float),
        high=np.array([r.high for r in scene.robots], dtype=float),
        max_speed=np.array([r.max_speed for r in scene.robots]),
        inv_mass=np.array([1.0 / obj.mass for obj in scene.objects]),
        inv_inertia=1.0 / inertia,
        radius=np.array([obj.radius for obj in scene.objects]),
        half=np.array([obj.half_extents for obj in scene.objects], dtype=float).reshape(-1, 3),
        is_box=np.array([obj.shape == "box" for obj in scene.objects]),
        groups=tuple(groups),
        obj_a=np.array(obj_a, dtype=int),
        obj_b=np.array(obj_b, dtype=int),
        robot=np.array(robot, dtype=int),
        body_b=tuple(body_b),
        gravity=np.array([0.0, 0.0, -scene.gravity]),
    )


# --- Batch conversion ---

def batch_from_vectors(vectors: np.ndarray, scene: SceneSpec) -> Batch:
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2 or vectors.shape[1] != scene.state_dim:
        raise DimensionMismatchError(f"State batch has shape {vectors.shape}, expected (B, {scene.state_dim}).")
    n_batch, n_robots, n_objects = vectors.shape[0], scene.n_robots, scene.n_objects
    sizes = [3 * n_robots, 3 * n_robots, 3 * n_objects, 4 * n_objects, 3 * n_objects, 3 * n_objects]
    shapes = [(n_robots, 3), (n_robots, 3), (n_objects, 3), (n_objects, 4), (n_objects, 3), (n_objects, 3)]
    parts, cursor = [], 0
    for size, shape in zip(sizes, shapes):
        parts.append(vectors[:, cursor:cursor + size].reshape((n_batch,) + shape).copy())
        cursor += size
    return Batch(*parts)


def batch_to_vectors(batch: Batch) -> np.ndarray:
    n_batch = batch.robot_q.shape[0]
    return np.concatenate([part.reshape(n_batch, -1) for part in batch], axis=1)


# --- Contact geometry ---

def _on_surface(compiled: CompiledScene, s: int, distance: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Distance of contacts whose point lies inside the extent of surface s; +inf elsewhere."""
    inside = np.all((point >= compiled.surface_low[s]) & (point <= compiled.surface_high[s]), axis=-1)
    return np.where(inside, distance, np.inf)


def _contacts(compiled: CompiledScene, robot_q: np.ndarray, pos: np.ndarray, quat: np.ndarray) -> Contacts:
    n_batch = robot_q.shape[0]
    distance, normal, point, lever_a, lever_b = [], [], [], [], []

    def emit(d, n, p, la, lb=None):
        distance.append(d.reshape(n_batch, -1))
        normal.append(n.reshape(n_batch, -1, 3))
        point.append(p.reshape(n_batch, -1, 3))
        lever_a.append(la.reshape(n_batch, -1, 3))
        lever_b.append(np.zeros_like(la).reshape(n_batch, -1, 3) if lb is None else lb.reshape(n_batch, -1, 3))

    for kind, a, b in compiled.groups:
        center = pos[:, a]
        if kind == "sphere_surface":
            n = np.broadcast_to(compiled.normals[b], center.shape)
            radius = compiled.radius[a]
            surface_point = center - radius * n
            emit(_on_surface(compiled, b, dot3(n, center) - compiled.offsets[b] - radius, surface_point), n, surface_point, -radius * n)
        elif kind == "box_surface":
            corners = quat_rotate(quat[:, a, None, :], BOX_CORNER_SIGNS * compiled.half[a])
            world = center[:, None, :] + corners
            n = np.broadcast_to(compiled.normals[b], world.shape)
            emit(_on_surface(compiled, b, dot3(n, world) - compiled.offsets[b], world), n, world, corners)
        elif kind == "sphere_robot":
            n, length = safe_unit(center - robot_q[:, b], _UP)
            radius = compiled.radius[a]
            emit(length - radius - compiled.robot_radius[b], n, center - radius * n, -radius * n)
        elif kind == "box_robot":
            dist, surface, outward = box_closest(center, quat[:, a], compiled.half[a], robot_q[:, b])
            emit(dist - compiled.robot_radius[b], -outward, surface, surface - center)
        elif kind == "sphere_sphere":
            n, length = safe_unit(center - pos[:, b], _UP)
            ra, rb = compiled.radius[a], compiled.radius[b]
            emit(length - ra - rb, n, center - ra * n, -ra * n, rb * n)
        elif kind == "sphere_box":
            dist, surface, outward = box_closest(pos[:, b], quat[:, b], compiled.half[b], center)
            radius = compiled.radius[a]
            emit(dist - radius, outward, surface, -radius * outward, surface - pos[:, b])
        elif kind == "box_sphere":
            dist, surface, outward = box_closest(center, quat[:, a], compiled.half[a], pos[:, b])
            radius = compiled.radius[b]
            emit(dist - radius, -outward, surface, surface - center, -radius * outward)

    if not distance:
        empty = np.zeros((n_batch, 0, 3))
        return Contacts(np.zeros((n_batch, 0)), empty, empty, empty, empty.copy())
    return Contacts(*(np.concatenate(parts, axis=1) for parts in (distance, normal, point, lever_a, lever_b)))


# --- Dynamics ---

def _apply_inv_inertia(compiled: CompiledScene, quat: np.ndarray, index: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """World-frame inverse inertia of objects `index` applied to vec."""
    q = quat[:, index]
    return quat_rotate(q, compiled.inv_inertia[index] * quat_rotate_inv(q, vec))


def _to_objects(compiled: CompiledScene, values_a: np.ndarray, values_b: np.ndarray) -> np.ndarray:
    """Sum per-contact vectors onto objects: +values_a on object a, -values_b on object b."""
    n_objects = compiled.inv_mass.shape[0]
    if n_objects == 0:
        return np.zeros(values_a.shape[:1] + (0,) + values_a.shape[2:])
    totals = []
    for i in range(n_objects):
        on_a = (compiled.obj_a == i).astype(float)[None, :, None]
        on_b = (compiled.obj_b == i).astype(float)[None, :, None]
        totals.append(ordered_sum(values_a * on_a - values_b * on_b, axis=1))
    return np.stack(totals, axis=1)


def _point_velocity(compiled: CompiledScene, vel, omega, robot_v, contacts: Contacts):
    """Velocity of object a at the contact minus the velocity of body b there."""
    a = compiled.obj_a
    b = np.maximum(compiled.obj_b, 0)
    r = np.maximum(compiled.robot, 0)
    has_b = (compiled.obj_b >= 0)[None, :, None]
    has_robot = (compiled.robot >= 0)[None, :, None]
    va = vel[:, a] + cross3(omega[:, a], contacts.lever_a)
    vb = np.where(has_b, vel[:, b] + cross3(omega[:, b], contacts.lever_b), 0.0)
    vb = vb + np.where(has_robot, robot_v[:, r], 0.0)
    return va - vb


def _contact_forces(compiled: CompiledScene, batch: Batch, contacts: Contacts):
    """
    Normal penalty forces and friction impulses for one substep.

    Returns:
        tuple: (normal force magnitude (B, C), friction impulse (B, C, 3),
        object velocity and angular velocity after the substep).
    """
    scene = compiled.scene
    dt = scene.dt
    active = contacts.distance < 0.0
    rel = _point_velocity(compiled, batch.object_vel, batch.object_omega, batch.robot_v, contacts)
    approach = -dot3(rel, contacts.normal)
    push = scene.contact_stiffness * (-contacts.distance) + scene.contact_damping * approach
    fn = np.where(active, np.maximum(push, 0.0), 0.0)

    normal_force = fn[..., None] * contacts.normal
    force = _to_objects(compiled, normal_force, normal_force)
    torque = _to_objects(compiled, cross3(contacts.lever_a, normal_force), cross3(contacts.lever_b, normal_force))
    all_objects = np.arange(compiled.inv_mass.shape[0])
    vel_pred = batch.object_vel + dt * (compiled.gravity + force * compiled.inv_mass[:, None])
    omega_pred = batch.object_omega + dt * _apply_inv_inertia(compiled, batch.object_quat, all_objects, torque)

    a = compiled.obj_a
    b = np.maximum(compiled.obj_b, 0)
    has_b = compiled.obj_b >= 0
    touching = _to_objects(compiled, active[..., None].astype(float), -active[..., None].astype(float))[..., 0]
    count = np.maximum(touching[:, a], np.where(has_b, touching[:, b], 0.0))
    relax = 1.0 / np.maximum(count, 1.0)
    inv_mass_pair = compiled.inv_mass[a] + np.where(has_b, compiled.inv_mass[b], 0.0)
    limit = scene.friction_mu * fn * dt

    impulse = np.zeros_like(normal_force)
    vel, omega = vel_pred, omega_pred
    for _ in range(FRICTION_ITERATIONS):
        rel = _point_velocity(compiled, vel, omega, batch.robot_v, contacts)
        slip = rel - dot3(rel, contacts.normal)[..., None] * contacts.normal
        direction, speed = safe_unit(slip, np.zeros(3))
        arm_a = cross3(contacts.lever_a, direction)
        arm_b = cross3(contacts.lever_b, direction)
        eff = (inv_mass_pair
               + dot3(arm_a, _apply_inv_inertia(compiled, batch.object_quat, a, arm_a))
               + np.where(has_b, dot3(arm_b, _apply_inv_inertia(compiled, batch.object_quat, b, arm_b)), 0.0))
        trial = impulse - (relax * speed / eff)[..., None] * direction
        magnitude = np.sqrt(dot3(trial, trial))
        scale = np.where(magnitude > limit, limit / np.maximum(magnitude, 1e-300), 1.0)
        impulse = np.where(active[..., None], trial * scale[..., None], 0.0)

        linear = _to_objects(compiled, impulse, impulse)
        angular = _to_objects(compiled, cross3(contacts.lever_a, impulse), cross3(contacts.lever_b, impulse))
        vel = vel_pred + linear * compiled.inv_mass[:, None]
        omega = omega_pred + _apply_inv_inertia(compiled, batch.object_quat, all_objects, angular)
    return fn, impulse, vel, omega


def _prepare_velocities(compiled: CompiledScene, velocities: np.ndarray) -> np.ndarray:
    """Scale commands above the speed limit down to it; commands already within it pass unchanged."""
    speed = np.sqrt(dot3(velocities, velocities))
    over = speed > compiled.max_speed * (1.0 + 1e-9)
    scale = np.where(over, compiled.max_speed / np.maximum(speed, 1e-300), 1.0)
    return velocities * scale[..., None]


def _substep(compiled: CompiledScene, batch: Batch, command: np.ndarray) -> Batch:
    dt = compiled.scene.dt
    target = batch.robot_q + dt * command
    robot_q = np.clip(target, compiled.low, compiled.high)
    blocked = (target < compiled.low) | (target > compiled.high)
    robot_v = np.where(blocked, 0.0, command)
    moved = batch._replace(robot_q=robot_q, robot_v=robot_v)

    contacts = _contacts(compiled, robot_q, batch.object_pos, batch.object_quat)
    _, _, vel, omega = _contact_forces(compiled, moved, contacts)
    pos = batch.object_pos + dt * vel
    quat = np.where(compiled.is_box[None, :, None], integrate_quat(batch.object_quat, omega, dt), batch.object_quat)
    return Batch(robot_q, robot_v, pos, quat, vel, omega)


def _diverged(batch: Batch) -> np.ndarray:
    n_batch = batch.robot_q.shape[0]
    flat = batch_to_vectors(batch).reshape(n_batch, -1)
    return ~np.all(np.isfinite(flat) & (np.abs(flat) <= DIVERGENCE_LIMIT), axis=1)


def advance(batch: Batch, command: np.ndarray, n_substeps: int, scene: SceneSpec,
            diverged: np.ndarray | None = None) -> tuple[Batch, np.ndarray]:
    """
    Hold one command per rollout for n_substeps.

    Diverged rollouts are frozen at their last sane state and flagged.

    Args:
        batch (Batch): States, leading axis B.
        command (np.ndarray): (B, R, 3) commanded robot velocities.
        n_substeps (int): Integration steps.
        scene (SceneSpec): The scene.
        diverged (np.ndarray | None): Flags carried from earlier actions.

    Returns:
        tuple[Batch, np.ndarray]: The advanced batch and the (B,) divergence flags.
    """
    compiled = compile_scene(scene)
    command = _prepare_velocities(compiled, np.asarray(command, dtype=float))
    flags = np.zeros(batch.robot_q.shape[0], dtype=bool) if diverged is None else diverged.copy()
    with np.errstate(all="ignore"):
        for _ in range(n_substeps):
            nxt = _substep(compiled, batch, command)
            flags |= _diverged(nxt)
            keep = flags
            batch = Batch(*(np.where(keep.reshape((-1,) + (1,) * (new.ndim - 1)), old, new)
                            for old, new in zip(batch, nxt)))
    return batch, flags


# --- Public operations ---

def _check_inputs(state: SystemState, scene: SceneSpec):
    vector = state.to_vector()
    if not np.all(np.isfinite(vector)):
        raise InvalidStateError("State contains non-finite entries.")
    if vector.shape[0] != scene.state_dim:
        raise DimensionMismatchError(f"State has dimension {vector.shape[0]}, scene '{scene.name}' expects {scene.state_dim}.")
    return vector


def _check_action(action: ActionCommand, scene: SceneSpec) -> np.ndarray:
    velocities = np.asarray(action.robot_target_vel, dtype=float).reshape(-1, 3)
    if velocities.shape[0] != scene.n_robots:
        raise DimensionMismatchError(f"Action has {velocities.shape[0]} robot commands, scene has {scene.n_robots} robots.")
    if not np.all(np.isfinite(velocities)):
        raise InvalidStateError("Action contains non-finite entries.")
    return velocities


def step(state: SystemState, action: ActionCommand, scene: SceneSpec) -> SystemState:
    """
    Advance `state` by `action.duration` seconds.

    Raises:
        InvalidStateError: Non-finite input.
        DivergedError: Any state magnitude left the sane range.
    """
    vector = _check_inputs(state, scene)
    velocities = _check_action(action, scene)
    batch = batch_from_vectors(vector[None], scene)
    batch, flags = advance(batch, velocities[None], action.n_substeps(scene.dt), scene)
    if flags[0]:
        raise DivergedError(f"Simulation diverged in scene '{scene.name}'.")
    return SystemState.from_vector(batch_to_vectors(batch)[0], scene.n_robots, scene.n_objects)


def rollout(state: SystemState, actions: Sequence[ActionCommand], scene: SceneSpec) -> list[SystemState]:
    """
    Fold `step` over `actions`, returning the end state of each action.

    Raises:
        ValueError: Empty action sequence.
        DivergedError: With `index` set to the failing action.
    """
    if len(actions) == 0:
        raise ValueError("rollout needs at least one action.")
    states = []
    current = state
    for index, action in enumerate(actions):
        try:
            current = step(current, action, scene)
        except DivergedError as e:
            raise DivergedError(f"Action {index}: {e}", index=index)
        states.append(current)
    return states


def rollout_candidates(start: np.ndarray, velocities: np.ndarray, n_substeps: int,
                       scene: SceneSpec) -> tuple[np.ndarray, np.ndarray]:
    """
    Simulate many single-action candidates from one start state.

    Args:
        start (np.ndarray): (D,) start state vector.
        velocities (np.ndarray): (B, R, 3) clamped commands.

    Returns:
        tuple: (B, D) end-state vectors and (B,) divergence flags.
    """
    n_batch = velocities.shape[0]
    batch = batch_from_vectors(np.repeat(np.asarray(start, dtype=float)[None], n_batch, axis=0), scene)
    batch, flags = advance(batch, velocities, n_substeps, scene)
    return batch_to_vectors(batch), flags


def rollout_plans(start: np.ndarray, plans: np.ndarray, n_substeps: int,
                  scene: SceneSpec) -> tuple[np.ndarray, np.ndarray]:
    """
    Simulate many multi-action plans from one start state.

    Args:
        plans (np.ndarray): (B, H, R, 3) commands, one per action slot.

    Returns:
        tuple: (B, H, D) end states of every action and (B,) divergence flags.
    """
    n_batch, horizon = plans.shape[0], plans.shape[1]
    batch = batch_from_vectors(np.repeat(np.asarray(start, dtype=float)[None], n_batch, axis=0), scene)
    flags = np.zeros(n_batch, dtype=bool)
    ends = []
    for h in range(horizon):
        batch, flags = advance(batch, plans[:, h], n_substeps, scene, flags)
        ends.append(batch_to_vectors(batch))
    return np.stack(ends, axis=1), flags


def min_separation(state: SystemState, scene: SceneSpec) -> float:
    """Smallest signed distance over robot-object, object-object and object-surface pairs (inf if none)."""
    compiled = compile_scene(scene)
    batch = batch_from_vectors(state.to_vector()[None], scene)
    contacts = _contacts(compiled, batch.robot_q, batch.object_pos, batch.object_quat)
    if contacts.distance.shape[1] == 0:
        return float("inf")
    return float(np.min(contacts.distance[0]))


def contact_report(state: SystemState, scene: SceneSpec) -> ContactReport:
    """Penetrating pairs of `state` with the forces one substep would apply (force on body a)."""
    compiled = compile_scene(scene)
    batch = batch_from_vectors(state.to_vector()[None], scene)
    contacts = _contacts(compiled, batch.robot_q, batch.object_pos, batch.object_quat)
    with np.errstate(all="ignore"):
        fn, impulse, _, _ = _contact_forces(compiled, batch, contacts)
    pairs = []
    for c in np.flatnonzero(contacts.distance[0] < 0.0):
        force = fn[0, c] * contacts.normal[0, c] + impulse[0, c] / scene.dt
        pairs.append(ContactPair(
            body_a=scene.object_id(int(compiled.obj_a[c])),
            body_b=compiled.body_b[c],
            point=contacts.point[0, c].copy(),
            normal=contacts.normal[0, c].copy(),
            penetration=float(-contacts.distance[0, c]),
            force=force,
        ))
    return ContactReport(pairs=pairs)
