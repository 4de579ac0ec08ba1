"""
Constraint programs of the stable-state NLP, written in jax so the solver gets
exact Jacobians.

One program is compiled per scene. It carries contact variables for every
admissible pair; which pairs are active and which face each active box contact
touches are runtime arguments, so a new assignment never recompiles.

Decision vector z = [robot_q (3R), object positions (3O), box quaternions
(4 per box), then per admissible pair its contact point (3) and force (3)].

Active pairs get four anchoring equalities, the friction cone and, for boxes,
the within-face margins. Inactive pairs pin their point and force to zero and
keep a one-sided non-penetration margin.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import jax

jax.config.update("jax_enable_x64", True)

import jax.numpy as jnp
import numpy as np

from functions.errors import DimensionMismatchError, ValidationError
from physics.geometry import quat_rotate, quat_rotate_inv
from physics.types import SceneSpec, SystemState
from stability.assignment import admissible_pairs
from stability.types import ContactAssignment, ContactVariable, NlpResiduals

_NORM_EPS = 1e-24
_CONE_EPS = 1e-16
_ROWS_PER_PAIR = 6
_CORNER_SIGNS = np.array([[x, y, w] for x in (-1.0, 1.0) for y in (-1.0, 1.0) for w in (-1.0, 1.0)])


def _norm(v):
    return jnp.sqrt(jnp.sum(v * v) + _NORM_EPS)


def _unit(v):
    return v / _norm(v)


def _rotate(q, v):
    u, w = q[1:], q[0]
    t = 2.0 * jnp.cross(u, v)
    return v + w * t + jnp.cross(u, t)


def _rotate_inv(q, v):
    u, w = -q[1:], q[0]
    t = 2.0 * jnp.cross(u, v)
    return v + w * t + jnp.cross(u, t)


def _box_sdf(center, quat, half, point):
    local = _rotate_inv(quat, point - center)
    gap = jnp.abs(local) - half
    return _norm(jnp.maximum(gap, 0.0)) + jnp.minimum(jnp.max(gap), 0.0)


def _face_frame(face):
    """Traced face index -> (axis, sign, outward unit vector in the body frame)."""
    axis = face // 2
    sign = 1.0 - 2.0 * (face % 2)
    return axis, sign, jnp.zeros(3).at[axis].set(sign)


def _tangents(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([0.0, 1.0, 0.0]) if abs(normal[0]) > 0.9 else np.array([1.0, 0.0, 0.0])
    t1 = helper - np.dot(helper, normal) * normal
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(normal, t1)


@dataclass(frozen=True)
class PairSpec:
    kind: str   # "<shape a>_<surface|robot|shape b>"
    a: int      # object index
    b: int      # surface, robot or object index

    @property
    def touches_box(self) -> bool:
        return "box" in self.kind


def resolve_pair(scene: SceneSpec, pair: tuple[str, str]) -> PairSpec:
    """Map a pair of body ids to its kind and body indices."""
    body_a, body_b = pair
    try:
        a = int(body_a.removeprefix("object"))
        shape_a = scene.objects[a].shape
    except (ValueError, IndexError):
        raise ValidationError(f"Unknown object id: {body_a}.")
    surfaces = [s.name for s in scene.static_surfaces]
    if body_b in surfaces:
        return PairSpec(f"{shape_a}_surface", a, surfaces.index(body_b))
    if body_b.startswith("robot"):
        b = int(body_b.removeprefix("robot"))
        if b >= scene.n_robots:
            raise ValidationError(f"Unknown robot id: {body_b}.")
        return PairSpec(f"{shape_a}_robot", a, b)
    if body_b.startswith("object"):
        b = int(body_b.removeprefix("object"))
        if b >= scene.n_objects or b <= a:
            raise ValidationError(f"Object pair {pair} must name a higher-index existing object second.")
        return PairSpec(f"{shape_a}_{scene.objects[b].shape}", a, b)
    raise ValidationError(f"Unknown body id: {body_b}.")


def _face_vector(face: int) -> tuple[int, float]:
    return face // 2, (1.0 if face % 2 == 0 else -1.0)


def _face_axis(direction_local: np.ndarray) -> int:
    """Face whose outward normal is most aligned with a body-frame direction."""
    axis = int(np.argmax(np.abs(direction_local)))
    return 2 * axis + (0 if direction_local[axis] >= 0.0 else 1)


@dataclass(frozen=True, eq=False)
class ContactSelection:
    """The active admissible pairs of one assignment, with the face each box contact touches."""
    slots: tuple[int, ...]  # admissible index of each assignment contact, in assignment order
    active: np.ndarray      # (K,) 1.0 on active pairs
    faces: np.ndarray       # (K,) 2*axis + (0 for +, 1 for -); 0 where unused


def select_contacts(config: SystemState, assignment: ContactAssignment, scene: SceneSpec) -> ContactSelection:
    """
    Resolve an assignment against the scene program, fixing the face of every
    box contact from the given configuration.

    Raises:
        ValidationError: A pair names an unknown body or cannot carry a contact.
    """
    program = build_program(scene)
    index = {pair: k for k, pair in enumerate(program.pair_ids)}
    pos, quat, robot_q = config.object_pos, config.object_quat, config.robot_q.reshape(-1, 3)
    active = np.zeros(len(program.pairs))
    faces = np.zeros(len(program.pairs), dtype=np.int64)
    slots = []
    for pair in assignment.contacts:
        spec = resolve_pair(scene, pair)
        if pair not in index:
            raise ValidationError(f"Pair {pair} cannot carry a contact in scene '{scene.name}'.")
        k = index[pair]
        slots.append(k)
        active[k] = 1.0
        a, b = spec.a, spec.b
        if spec.kind == "box_surface":
            faces[k] = _face_axis(-quat_rotate_inv(quat[a], np.array(scene.static_surfaces[b].normal)))
        elif spec.kind == "box_robot":
            faces[k] = _face_axis(quat_rotate_inv(quat[a], robot_q[b] - pos[a]))
        elif spec.kind == "box_sphere":
            faces[k] = _face_axis(quat_rotate_inv(quat[a], pos[b] - pos[a]))
        elif spec.kind == "sphere_box":
            faces[k] = _face_axis(quat_rotate_inv(quat[b], pos[a] - pos[b]))
    return ContactSelection(slots=tuple(slots), active=active, faces=faces)


class BoundProgram:
    """A scene program with one contact selection fixed, as the solver sees it."""

    def __init__(self, program: "ResidualProgram", selection: ContactSelection):
        self.program = program
        self.selection = selection
        self.n_config = program.n_config
        self.n_eq = program.n_eq
        self.n_ineq = program.n_ineq
        self._active = jnp.asarray(selection.active)
        self._faces = jnp.asarray(selection.faces)

    def constraints(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        c, g = self.program.constraints(z, self._active, self._faces)
        return np.asarray(c), np.asarray(g)

    def evaluate(self, z: np.ndarray) -> tuple[np.ndarray, ...]:
        """(c, g, dc/dz, dg/dz)"""
        return tuple(np.asarray(x) for x in self.program.evaluate(z, self._active, self._faces))


@dataclass(frozen=True, eq=False)
class ResidualProgram:
    """Compiled residuals of one scene over all of its admissible pairs."""
    scene: SceneSpec
    pairs: tuple[PairSpec, ...]
    pair_ids: tuple[tuple[str, str], ...]
    n_config: int
    n_vars: int
    n_eq: int
    n_ineq: int
    box_slot: tuple[int, ...]  # quaternion slot per object, -1 for spheres
    constraints: Callable      # (z, active, faces) -> (c, g)
    evaluate: Callable         # (z, active, faces) -> (c, g, dc/dz, dg/dz)

    def bind(self, selection: ContactSelection) -> BoundProgram:
        return BoundProgram(self, selection)

    def config_vector(self, config: SystemState) -> np.ndarray:
        quats = [config.object_quat[i] for i, slot in enumerate(self.box_slot) if slot >= 0]
        return np.concatenate([config.robot_q, config.object_pos.ravel()] + quats)

    def pack(self, config: SystemState, contact_vars: list[ContactVariable],
             selection: ContactSelection) -> np.ndarray:
        if len(contact_vars) != len(selection.slots):
            raise DimensionMismatchError(
                f"Got {len(contact_vars)} contact variables for an assignment of {len(selection.slots)} contacts.")
        z = np.zeros(self.n_vars)
        z[:self.n_config] = self.config_vector(config)
        for var, slot in zip(contact_vars, selection.slots):
            start = self.n_config + 6 * slot
            z[start:start + 3] = np.asarray(var.point, dtype=float)
            z[start + 3:start + 6] = np.asarray(var.force, dtype=float)
        return z

    def unpack(self, z: np.ndarray, selection: ContactSelection) -> tuple[SystemState, list[ContactVariable]]:
        scene = self.scene
        n_r, n_o = 3 * scene.n_robots, 3 * scene.n_objects
        robot_q = z[:n_r].copy()
        pos = z[n_r:n_r + n_o].reshape(-1, 3).copy()
        quat = np.tile([1.0, 0.0, 0.0, 0.0], (scene.n_objects, 1))
        base = n_r + n_o
        for i, slot in enumerate(self.box_slot):
            if slot >= 0:
                q = z[base + 4 * slot:base + 4 * slot + 4]
                quat[i] = q / np.sqrt(np.sum(q * q))
        contact_vars = []
        for slot in selection.slots:
            start = self.n_config + 6 * slot
            contact_vars.append(ContactVariable(point=z[start:start + 3].copy(), force=z[start + 3:start + 6].copy()))
        return SystemState.at_rest(robot_q, pos, quat), contact_vars


def _build_functions(scene: SceneSpec, pairs: tuple[PairSpec, ...], box_slot: tuple[int, ...], n_config: int):
    n_r, n_o = 3 * scene.n_robots, 3 * scene.n_objects
    radius = [obj.radius for obj in scene.objects]
    half = [jnp.asarray(obj.half_extents, dtype=float) for obj in scene.objects]
    mass = [obj.mass for obj in scene.objects]
    normals = [np.array(s.normal) for s in scene.static_surfaces]
    offsets = [s.offset for s in scene.static_surfaces]
    tangents = [_tangents(n) for n in normals]
    extents = [[(j, lo, hi) for j, (lo, hi) in enumerate(zip(s.low, s.high)) if np.isfinite(lo) or np.isfinite(hi)]
               for s in scene.static_surfaces]
    robot_radius = [r.radius for r in scene.robots]
    low = np.array([r.low for r in scene.robots]).ravel()
    high = np.array([r.high for r in scene.robots]).ravel()
    gravity = np.array([0.0, 0.0, -scene.gravity])
    mu = scene.friction_mu
    identity = jnp.array([1.0, 0.0, 0.0, 0.0])

    def split(z):
        robot_q = z[:n_r].reshape(-1, 3)
        pos = z[n_r:n_r + n_o].reshape(-1, 3)
        quats = []
        for slot in box_slot:
            start = n_r + n_o + 4 * slot
            quats.append(z[start:start + 4] if slot >= 0 else identity)
        points, forces = [], []
        for k in range(len(pairs)):
            start = n_config + 6 * k
            points.append(z[start:start + 3])
            forces.append(z[start + 3:start + 6])
        return robot_q, pos, quats, points, forces

    def box_side(spec, robot_q, pos, quats):
        """(box index, center of the other body, radius of the other body) of a box pair."""
        if spec.kind == "box_robot":
            return spec.a, robot_q[spec.b], robot_radius[spec.b]
        if spec.kind == "box_sphere":
            return spec.a, pos[spec.b], radius[spec.b]
        return spec.b, pos[spec.a], radius[spec.a]

    def anchor_rows(spec, face, robot_q, pos, quats, p):
        """Four rows placing p on both bodies with the bodies just touching."""
        kind, a, b = spec.kind, spec.a, spec.b
        if kind == "sphere_surface":
            n = normals[b]
            return [jnp.dot(n, pos[a]) - offsets[b] - radius[a], *(p - (pos[a] - radius[a] * n))]
        if kind in ("sphere_robot", "sphere_sphere"):
            other, other_radius = (robot_q[b], robot_radius[b]) if kind == "sphere_robot" else (pos[b], radius[b])
            d = pos[a] - other
            return [_norm(d) - radius[a] - other_radius, *(p - (pos[a] - radius[a] * _unit(d)))]
        axis, sign, outward = _face_frame(face)
        if kind == "box_surface":
            t1, t2 = tangents[b]
            face_normal = _rotate(quats[a], outward)
            local = _rotate_inv(quats[a], p - pos[a])
            return [jnp.dot(normals[b], p) - offsets[b], local[axis] - sign * half[a][axis],
                    jnp.dot(face_normal, t1), jnp.dot(face_normal, t2)]
        box, other, other_radius = box_side(spec, robot_q, pos, quats)
        local = _rotate_inv(quats[box], p - pos[box])
        center = _rotate_inv(quats[box], other - pos[box])
        j1, j2 = (axis + 1) % 3, (axis + 2) % 3
        return [local[axis] - sign * half[box][axis], center[j1] - local[j1], center[j2] - local[j2],
                sign * center[axis] - half[box][axis] - other_radius]

    def contact_normal(spec, face, robot_q, pos, quats):
        """Direction of the force on object a."""
        kind, a, b = spec.kind, spec.a, spec.b
        if kind.endswith("_surface"):
            return jnp.asarray(normals[b])
        if kind == "sphere_robot":
            return _unit(pos[a] - robot_q[b])
        if kind == "sphere_sphere":
            return _unit(pos[a] - pos[b])
        _, _, outward = _face_frame(face)
        if kind == "sphere_box":
            return _rotate(quats[b], outward)
        return -_rotate(quats[a], outward)

    def outside_terms(s, p):
        """Distances of p beyond each finite extent bound of surface s (negative inside)."""
        terms = []
        for j, lo, hi in extents[s]:
            if np.isfinite(lo):
                terms.append(lo - p[j])
            if np.isfinite(hi):
                terms.append(p[j] - hi)
        return terms

    def surface_margin(s, depth, footprint):
        """Penetration depth, waived where the footprint is off a bounded surface."""
        terms = outside_terms(s, footprint)
        if not terms:
            return depth
        return jnp.minimum(depth, -jnp.max(jnp.stack(terms)))

    def separation_rows(spec, robot_q, pos, quats):
        """One-sided margins (positive when penetrating) of a pair that is not in contact."""
        kind, a, b = spec.kind, spec.a, spec.b
        if kind == "sphere_surface":
            depth = -(jnp.dot(normals[b], pos[a]) - offsets[b] - radius[a])
            return [surface_margin(b, depth, pos[a] - radius[a] * normals[b])]
        if kind == "box_surface":
            rows = []
            for signs in _CORNER_SIGNS:
                corner = pos[a] + _rotate(quats[a], signs * half[a])
                rows.append(surface_margin(b, -(jnp.dot(normals[b], corner) - offsets[b]), corner))
            return rows
        if kind == "sphere_robot":
            return [-(_norm(pos[a] - robot_q[b]) - radius[a] - robot_radius[b])]
        if kind == "sphere_sphere":
            return [-(_norm(pos[a] - pos[b]) - radius[a] - radius[b])]
        box, other, other_radius = box_side(spec, robot_q, pos, quats)
        return [-(_box_sdf(pos[box], quats[box], half[box], other) - other_radius)]

    def equality(z, active, faces):
        robot_q, pos, quats, points, forces = split(z)
        blocks = []
        for k, (spec, p, f) in enumerate(zip(pairs, points, forces)):
            geometry = jnp.concatenate([jnp.stack(anchor_rows(spec, faces[k], robot_q, pos, quats, p)),
                                        jnp.zeros(2)])
            blocks.append(active[k] * geometry + (1.0 - active[k]) * jnp.concatenate([p, f]))
        rows = []
        for i in range(scene.n_objects):
            force = mass[i] * gravity
            moment = jnp.zeros(3)
            for k, (spec, p, f) in enumerate(zip(pairs, points, forces)):
                f = active[k] * f
                if spec.a == i:
                    force = force + f
                    moment = moment + jnp.cross(p - pos[i], f)
                elif spec.kind.endswith(("_sphere", "_box")) and spec.b == i:
                    force = force - f
                    moment = moment - jnp.cross(p - pos[i], f)
            rows += [force, moment]
        quat_rows = [jnp.sum(quats[i] * quats[i]) - 1.0 for i, slot in enumerate(box_slot) if slot >= 0]
        if quat_rows:
            rows.append(jnp.stack(quat_rows))
        return jnp.concatenate(blocks + rows)

    def inequality(z, active, faces):
        robot_q, pos, quats, points, forces = split(z)
        rows = []
        for k, (spec, p, f) in enumerate(zip(pairs, points, forces)):
            n = contact_normal(spec, faces[k], robot_q, pos, quats)
            f_n = jnp.dot(f, n)
            f_t = f - f_n * n
            contact = [-f_n, jnp.sqrt(jnp.sum(f_t * f_t) + _CONE_EPS) - mu * f_n]
            if spec.touches_box:
                axis, _, outward = _face_frame(faces[k])
                box = spec.a if spec.kind.startswith("box") else spec.b
                local = _rotate_inv(quats[box], p - pos[box])
                for j in ((axis + 1) % 3, (axis + 2) % 3):
                    contact.append(local[j] ** 2 - half[box][j] ** 2)
                if spec.kind == "box_surface":
                    # the touching face must look into the surface, not out of it
                    contact.append(jnp.dot(_rotate(quats[box], outward), normals[spec.b]))
            if spec.kind.endswith("_surface"):
                contact += outside_terms(spec.b, p)
            rows.append(active[k] * jnp.stack(contact))
            rows.append((1.0 - active[k]) * jnp.stack(separation_rows(spec, robot_q, pos, quats)))
        q = robot_q.ravel()
        rows += [q - high, low - q]
        return jnp.concatenate(rows)

    return equality, inequality


@lru_cache(maxsize=None)
def build_program(scene: SceneSpec) -> ResidualProgram:
    """Compile (and cache) the residual program of a scene."""
    box_slot, count = [], 0
    for obj in scene.objects:
        box_slot.append(count if obj.shape == "box" else -1)
        count += obj.shape == "box"
    box_slot = tuple(box_slot)
    pair_ids = tuple(admissible_pairs(scene))
    pairs = tuple(resolve_pair(scene, pair) for pair in pair_ids)
    n_config = 3 * scene.n_robots + 3 * scene.n_objects + 4 * count
    equality, inequality = _build_functions(scene, pairs, box_slot, n_config)

    def constraints(z, active, faces):
        return equality(z, active, faces), inequality(z, active, faces)

    def evaluate(z, active, faces):
        return (equality(z, active, faces), inequality(z, active, faces),
                jax.jacfwd(equality)(z, active, faces), jax.jacfwd(inequality)(z, active, faces))

    n_vars = n_config + _ROWS_PER_PAIR * len(pairs)
    shapes = jax.eval_shape(constraints, jnp.zeros(n_vars), jnp.zeros(len(pairs)),
                            jnp.zeros(len(pairs), dtype=jnp.int64))
    return ResidualProgram(
        scene=scene,
        pairs=pairs,
        pair_ids=pair_ids,
        n_config=n_config,
        n_vars=n_vars,
        n_eq=int(shapes[0].shape[0]),
        n_ineq=int(shapes[1].shape[0]),
        box_slot=box_slot,
        constraints=jax.jit(constraints),
        evaluate=jax.jit(evaluate),
    )


def evaluate_residuals(config: SystemState, contact_vars: list[ContactVariable],
                       assignment: ContactAssignment, scene: SceneSpec,
                       selection: ContactSelection | None = None) -> NlpResiduals:
    """
    Equality and inequality residuals of the stability NLP at a point.

    Rows of pairs outside the assignment are pinned or one-sided, so they read
    zero (or negative) whenever the inactive pairs are apart.

    Raises:
        DimensionMismatchError: contact_vars and assignment disagree in length.
    """
    if len(contact_vars) != assignment.count:
        raise DimensionMismatchError(
            f"Got {len(contact_vars)} contact variables for an assignment of {assignment.count} contacts.")
    if selection is None:
        selection = select_contacts(config, assignment, scene)
    program = build_program(scene)
    c, g = program.bind(selection).constraints(program.pack(config, contact_vars, selection))
    return NlpResiduals(equality=c, inequality=g)


def initial_contact_vars(config: SystemState, selection: ContactSelection, scene: SceneSpec) -> list[ContactVariable]:
    """
    Cold start for the contact variables: each point at the midpoint of the
    closest-point pair of its two bodies, each force (0, 0, m g / count).
    """
    program = build_program(scene)
    pos, quat, robot_q = config.object_pos, config.object_quat, config.robot_q.reshape(-1, 3)
    contact_vars = []

    def face_point(obj_index, face, toward):
        axis, sign = _face_vector(face)
        h = np.array(scene.objects[obj_index].half_extents)
        local = np.clip(quat_rotate_inv(quat[obj_index], toward - pos[obj_index]), -h, h)
        local[axis] = sign * h[axis]
        return pos[obj_index] + quat_rotate(quat[obj_index], local)

    def toward(center, radius, target):
        direction = target - center
        length = np.linalg.norm(direction)
        return center + radius * (direction / length if length > 1e-12 else np.array([0.0, 0.0, -1.0]))

    for slot in selection.slots:
        spec, face = program.pairs[slot], int(selection.faces[slot])
        kind, a, b = spec.kind, spec.a, spec.b
        if kind == "sphere_surface":
            n, d = np.array(scene.static_surfaces[b].normal), scene.static_surfaces[b].offset
            on_a = pos[a] - scene.objects[a].radius * n
            on_b = pos[a] - (np.dot(n, pos[a]) - d) * n
        elif kind == "box_surface":
            n, d = np.array(scene.static_surfaces[b].normal), scene.static_surfaces[b].offset
            axis, sign = _face_vector(face)
            offset = np.zeros(3)
            offset[axis] = sign * scene.objects[a].half_extents[axis]
            on_a = pos[a] + quat_rotate(quat[a], offset)
            on_b = on_a - (np.dot(n, on_a) - d) * n
        elif kind == "sphere_robot":
            on_a = toward(pos[a], scene.objects[a].radius, robot_q[b])
            on_b = toward(robot_q[b], scene.robots[b].radius, pos[a])
        elif kind == "box_robot":
            on_a = face_point(a, face, robot_q[b])
            on_b = toward(robot_q[b], scene.robots[b].radius, on_a)
        elif kind == "sphere_sphere":
            on_a = toward(pos[a], scene.objects[a].radius, pos[b])
            on_b = toward(pos[b], scene.objects[b].radius, pos[a])
        elif kind == "sphere_box":
            on_b = face_point(b, face, pos[a])
            on_a = toward(pos[a], scene.objects[a].radius, on_b)
        else:
            on_a = face_point(a, face, pos[b])
            on_b = toward(pos[b], scene.objects[b].radius, on_a)
        force = np.array([0.0, 0.0, scene.objects[a].mass * scene.gravity / len(selection.slots)])
        contact_vars.append(ContactVariable(point=0.5 * (on_a + on_b), force=force))
    return contact_vars
