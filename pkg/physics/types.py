"""
Domain types of the simulator: the scene description, the system state, the
robot command and the contact diagnostics.
"""

from dataclasses import dataclass, field

import numpy as np

from config.constants import CONTACT_DAMPING, CONTACT_STIFFNESS, DT, GRAVITY, SCENE_EXTENT_SCALE
from functions.errors import DimensionMismatchError, InvalidStateError, ValidationError

SHAPES = ("sphere", "box")
_INF = float("inf")


@dataclass(frozen=True)
class HalfSpace:
    """
    Static surface {p : normal . p >= offset} is free space.

    A surface exists only over its extent, an axis-aligned box that contact
    points must lie in; the default extent is unbounded.
    """
    name: str
    normal: tuple[float, float, float]
    offset: float
    low: tuple[float, float, float] = (-_INF, -_INF, -_INF)
    high: tuple[float, float, float] = (_INF, _INF, _INF)

    @property
    def bounded(self) -> bool:
        return any(np.isfinite(self.low)) or any(np.isfinite(self.high))

    def extent_dict(self) -> dict:
        """Finite extent bounds, None where unbounded (JSON has no infinity)."""
        return {"low": [v if np.isfinite(v) else None for v in self.low],
                "high": [v if np.isfinite(v) else None for v in self.high]}


def _bound(value, default: float) -> float:
    return default if value is None else float(value)


@dataclass(frozen=True)
class RobotSpec:
    """Sphere robot on a 3D translational joint."""
    radius: float
    low: tuple[float, float, float]
    high: tuple[float, float, float]
    max_speed: float


@dataclass(frozen=True)
class ObjectSpec:
    """Free (underactuated) object."""
    shape: str
    mass: float
    radius: float = 0.0
    half_extents: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def inertia(self) -> np.ndarray:
        """Principal moments of inertia in the body frame."""
        if self.shape == "sphere":
            moment = 0.4 * self.mass * self.radius ** 2
            return np.array([moment, moment, moment])
        hx, hy, hz = self.half_extents
        return self.mass / 3.0 * np.array([hy ** 2 + hz ** 2, hx ** 2 + hz ** 2, hx ** 2 + hy ** 2])


@dataclass(frozen=True)
class SceneSpec:
    """
    Complete description of a simulated environment.

    Hashable (all fields are tuples) so compiled scene arrays and solver
    programs can be cached per scene.
    """
    name: str
    static_surfaces: tuple[HalfSpace, ...]
    robots: tuple[RobotSpec, ...]
    objects: tuple[ObjectSpec, ...]
    friction_mu: float
    gravity: float = GRAVITY
    dt: float = DT
    contact_stiffness: float = CONTACT_STIFFNESS
    contact_damping: float = CONTACT_DAMPING

    @property
    def n_robots(self) -> int:
        return len(self.robots)

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def state_dim(self) -> int:
        return 6 * self.n_robots + 13 * self.n_objects

    def robot_id(self, index: int) -> str:
        return f"robot{index}"

    def object_id(self, index: int) -> str:
        return f"object{index}"

    def body_ids(self) -> list[str]:
        """Ids of every body: surfaces by name, then robots, then objects."""
        return ([surface.name for surface in self.static_surfaces]
                + [self.robot_id(i) for i in range(self.n_robots)]
                + [self.object_id(i) for i in range(self.n_objects)])

    def workspace(self) -> tuple[np.ndarray, np.ndarray]:
        """Union of the robot position limits (the scene extent)."""
        low = np.min([robot.low for robot in self.robots], axis=0)
        high = np.max([robot.high for robot in self.robots], axis=0)
        return low, high

    def object_bounds(self, scale: float = SCENE_EXTENT_SCALE) -> tuple[np.ndarray, np.ndarray]:
        """Bounding box for object positions: the scene extent scaled about its center."""
        low, high = self.workspace()
        center = 0.5 * (low + high)
        half = 0.5 * (high - low) * scale
        return center - half, center + half

    def validate(self) -> "SceneSpec":
        """
        Check the scene invariants.

        Raises:
            ValidationError: If a normal is not unit length, a size is not
                positive, limits are not ordered, or a shape is unsupported.
        """
        for surface in self.static_surfaces:
            norm = float(np.linalg.norm(surface.normal))
            if abs(norm - 1.0) > 1e-9:
                raise ValidationError(f"Surface '{surface.name}' normal has length {norm}, expected 1.")
            if any(lo >= hi for lo, hi in zip(surface.low, surface.high)):
                raise ValidationError(f"Surface '{surface.name}' extent {surface.low} / {surface.high} is not ordered.")
        if not self.robots:
            raise ValidationError(f"Scene '{self.name}' has no robot.")
        for i, robot in enumerate(self.robots):
            if robot.radius <= 0 or robot.max_speed <= 0:
                raise ValidationError(f"robot{i}: radius and max_speed must be positive.")
            if any(lo >= hi for lo, hi in zip(robot.low, robot.high)):
                raise ValidationError(f"robot{i}: position limits {robot.low} / {robot.high} are not ordered.")
        n_boxes = 0
        for i, obj in enumerate(self.objects):
            if obj.shape not in SHAPES:
                raise ValidationError(f"object{i}: unsupported shape '{obj.shape}'. Supported: {', '.join(SHAPES)}")
            if obj.mass <= 0:
                raise ValidationError(f"object{i}: mass must be positive.")
            if obj.shape == "sphere" and obj.radius <= 0:
                raise ValidationError(f"object{i}: sphere radius must be positive.")
            if obj.shape == "box":
                n_boxes += 1
                if any(h <= 0 for h in obj.half_extents):
                    raise ValidationError(f"object{i}: box half extents must be positive.")
        if n_boxes > 1:
            raise ValidationError("Box-box contact is not modelled; use at most one box object.")
        if self.dt <= 0 or self.contact_stiffness <= 0 or self.contact_damping < 0:
            raise ValidationError("dt and contact_stiffness must be positive, contact_damping non-negative.")
        if self.friction_mu < 0 or self.gravity < 0:
            raise ValidationError("friction_mu and gravity must be non-negative.")
        ids = self.body_ids()
        if len(set(ids)) != len(ids):
            raise ValidationError(f"Body ids must be unique, got {ids}.")
        return self

    @classmethod
    def from_dict(cls, data: dict, name: str = "inline") -> "SceneSpec":
        """Build a scene from its JSON/YAML document (SceneSpec field names)."""
        try:
            surfaces = tuple(
                HalfSpace(name=s.get("name", f"surface{i}"),
                          normal=tuple(float(v) for v in s["normal"]),
                          offset=float(s["offset"]),
                          low=tuple(_bound(v, -_INF) for v in s.get("extent", {}).get("low", [None] * 3)),
                          high=tuple(_bound(v, _INF) for v in s.get("extent", {}).get("high", [None] * 3)))
                for i, s in enumerate(data["static_surfaces"])
            )
            robots = tuple(
                RobotSpec(radius=float(r["radius"]),
                          low=tuple(float(v) for v in r["position_limits"]["low"]),
                          high=tuple(float(v) for v in r["position_limits"]["high"]),
                          max_speed=float(r["max_speed"]))
                for r in data["robots"]
            )
            objects = tuple(
                ObjectSpec(shape=o["shape"],
                           mass=float(o["mass"]),
                           radius=float(o.get("radius", 0.0)),
                           half_extents=tuple(float(v) for v in o.get("half_extents", (0.0, 0.0, 0.0))))
                for o in data["objects"]
            )
        except (KeyError, TypeError) as e:
            raise ValidationError(f"Scene document '{name}' is missing or mistyped a field: {e}")
        scene = cls(
            name=data.get("name", name),
            static_surfaces=surfaces,
            robots=robots,
            objects=objects,
            friction_mu=float(data.get("friction_mu", 0.5)),
            gravity=float(data.get("gravity", GRAVITY)),
            dt=float(data.get("dt", DT)),
            contact_stiffness=float(data.get("contact_stiffness", CONTACT_STIFFNESS)),
            contact_damping=float(data.get("contact_damping", CONTACT_DAMPING)),
        )
        return scene.validate()

    def to_dict(self) -> dict:
        """Inverse of from_dict."""
        objects = []
        for obj in self.objects:
            entry = {"shape": obj.shape, "mass": obj.mass}
            if obj.shape == "sphere":
                entry["radius"] = obj.radius
            else:
                entry["half_extents"] = list(obj.half_extents)
            objects.append(entry)
        return {
            "name": self.name,
            "static_surfaces": [{"name": s.name, "normal": list(s.normal), "offset": s.offset,
                                 **({"extent": s.extent_dict()} if s.bounded else {})}
                                for s in self.static_surfaces],
            "robots": [{"radius": r.radius,
                        "position_limits": {"low": list(r.low), "high": list(r.high)},
                        "max_speed": r.max_speed} for r in self.robots],
            "objects": objects,
            "friction_mu": self.friction_mu,
            "gravity": self.gravity,
            "dt": self.dt,
            "contact_stiffness": self.contact_stiffness,
            "contact_damping": self.contact_damping,
        }


@dataclass(frozen=True, eq=False)
class SystemState:
    """
    Full configuration and velocity of robots and objects.

    Vector layout (to_vector): robot_q, robot_v, object_pos, object_quat,
    object_vel, object_omega, each flattened.
    """
    robot_q: np.ndarray       # (3 * n_robots,)
    robot_v: np.ndarray       # (3 * n_robots,)
    object_pos: np.ndarray    # (n_objects, 3)
    object_quat: np.ndarray   # (n_objects, 4), w x y z
    object_vel: np.ndarray    # (n_objects, 3)
    object_omega: np.ndarray  # (n_objects, 3)

    @property
    def n_robots(self) -> int:
        return self.robot_q.shape[0] // 3

    @property
    def n_objects(self) -> int:
        return self.object_pos.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([
            self.robot_q, self.robot_v,
            self.object_pos.ravel(), self.object_quat.ravel(),
            self.object_vel.ravel(), self.object_omega.ravel(),
        ])

    @classmethod
    def from_vector(cls, vector: np.ndarray, n_robots: int, n_objects: int) -> "SystemState":
        vector = np.asarray(vector, dtype=float)
        expected = 6 * n_robots + 13 * n_objects
        if vector.shape != (expected,):
            raise DimensionMismatchError(f"State vector has shape {vector.shape}, expected ({expected},).")
        r3, o3, o4 = 3 * n_robots, 3 * n_objects, 4 * n_objects
        cursor = 0
        parts = []
        for size in (r3, r3, o3, o4, o3, o3):
            parts.append(vector[cursor:cursor + size].copy())
            cursor += size
        return cls(
            robot_q=parts[0], robot_v=parts[1],
            object_pos=parts[2].reshape(n_objects, 3),
            object_quat=parts[3].reshape(n_objects, 4),
            object_vel=parts[4].reshape(n_objects, 3),
            object_omega=parts[5].reshape(n_objects, 3),
        )

    @classmethod
    def at_rest(cls, robot_q, object_pos, object_quat=None) -> "SystemState":
        """State with zero velocities; identity orientations when none are given."""
        object_pos = np.asarray(object_pos, dtype=float).reshape(-1, 3)
        n_objects = object_pos.shape[0]
        if object_quat is None:
            object_quat = np.tile([1.0, 0.0, 0.0, 0.0], (n_objects, 1))
        robot_q = np.asarray(robot_q, dtype=float).ravel()
        return cls(
            robot_q=robot_q, robot_v=np.zeros_like(robot_q),
            object_pos=object_pos, object_quat=np.asarray(object_quat, dtype=float).reshape(n_objects, 4),
            object_vel=np.zeros((n_objects, 3)), object_omega=np.zeros((n_objects, 3)),
        )

    def with_zero_velocity(self) -> "SystemState":
        return SystemState.at_rest(self.robot_q.copy(), self.object_pos.copy(), self.object_quat.copy())

    def validate(self, scene: SceneSpec | None = None, position_tol: float = 1e-9) -> "SystemState":
        """
        Check the state invariants.

        Raises:
            InvalidStateError: Non-finite entry, non-unit quaternion or robot
                position outside the scene limits.
            DimensionMismatchError: Shapes do not match the scene.
        """
        vector = self.to_vector()
        if not np.all(np.isfinite(vector)):
            raise InvalidStateError("State contains non-finite entries.")
        norms = np.sqrt(np.sum(self.object_quat ** 2, axis=1))
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise InvalidStateError(f"Object quaternions are not unit norm: {norms}.")
        if scene is not None:
            if self.n_robots != scene.n_robots or self.n_objects != scene.n_objects:
                raise DimensionMismatchError(
                    f"State has {self.n_robots} robots / {self.n_objects} objects, "
                    f"scene '{scene.name}' has {scene.n_robots} / {scene.n_objects}.")
            q = self.robot_q.reshape(-1, 3)
            for i, robot in enumerate(scene.robots):
                if np.any(q[i] < np.array(robot.low) - position_tol) or np.any(q[i] > np.array(robot.high) + position_tol):
                    raise InvalidStateError(f"robot{i} position {q[i]} is outside its limits.")
        return self

    def to_dict(self) -> dict:
        return {
            "robot_q": self.robot_q.tolist(),
            "robot_v": self.robot_v.tolist(),
            "object_pos": self.object_pos.tolist(),
            "object_quat": self.object_quat.tolist(),
            "object_vel": self.object_vel.tolist(),
            "object_omega": self.object_omega.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SystemState":
        n_objects = len(data["object_pos"])
        return cls(
            robot_q=np.array(data["robot_q"], dtype=float),
            robot_v=np.array(data["robot_v"], dtype=float),
            object_pos=np.array(data["object_pos"], dtype=float).reshape(n_objects, 3),
            object_quat=np.array(data["object_quat"], dtype=float).reshape(n_objects, 4),
            object_vel=np.array(data["object_vel"], dtype=float).reshape(n_objects, 3),
            object_omega=np.array(data["object_omega"], dtype=float).reshape(n_objects, 3),
        )


@dataclass(frozen=True, eq=False)
class ActionCommand:
    """Commanded velocity per robot held for `duration` seconds."""
    robot_target_vel: np.ndarray  # (n_robots, 3)
    duration: float

    @classmethod
    def clamped(cls, velocities, duration: float, scene: SceneSpec) -> "ActionCommand":
        """Build a command with every robot velocity scaled into its speed limit."""
        velocities = np.array(velocities, dtype=float).reshape(scene.n_robots, 3)
        return cls(robot_target_vel=clamp_speeds(velocities[None], scene)[0], duration=float(duration))

    @classmethod
    def zero(cls, scene: SceneSpec, duration: float) -> "ActionCommand":
        return cls(robot_target_vel=np.zeros((scene.n_robots, 3)), duration=float(duration))

    def n_substeps(self, dt: float) -> int:
        """
        Number of integration steps covered by the command.

        Raises:
            ValidationError: If duration is not a positive multiple of dt.
        """
        count = int(round(self.duration / dt))
        if count < 1 or abs(count * dt - self.duration) > 1e-9:
            raise ValidationError(f"Action duration {self.duration} is not a positive multiple of dt={dt}.")
        return count

    def to_dict(self) -> dict:
        return {"robot_target_vel": self.robot_target_vel.tolist(), "duration": self.duration}

    @classmethod
    def from_dict(cls, data: dict) -> "ActionCommand":
        return cls(robot_target_vel=np.array(data["robot_target_vel"], dtype=float),
                   duration=float(data["duration"]))


def clamp_speeds(velocities: np.ndarray, scene: SceneSpec) -> np.ndarray:
    """Scale (batch, n_robots, 3) velocities so each robot stays within max_speed."""
    max_speed = np.array([robot.max_speed for robot in scene.robots])
    speed = np.sqrt(velocities[..., 0] ** 2 + velocities[..., 1] ** 2 + velocities[..., 2] ** 2)
    scale = np.minimum(1.0, max_speed / np.maximum(speed, 1e-300))
    return velocities * scale[..., None]


@dataclass(frozen=True, eq=False)
class ContactPair:
    body_a: str
    body_b: str
    point: np.ndarray
    normal: np.ndarray       # direction of the force on body_a
    penetration: float
    force: np.ndarray        # force on body_a


@dataclass(frozen=True, eq=False)
class ContactReport:
    pairs: list[ContactPair] = field(default_factory=list)
