"""
Small scenes and hand-made stable-state sets shared by the unit tests.
"""

import numpy as np

from physics.scenes import get_scene
from physics.types import SceneSpec, SystemState
from stability.types import ContactAssignment, ContactVariable, StableState

FLOOR_SCENE = {
    "name": "floor_test",
    "static_surfaces": [{"name": "floor", "normal": [0.0, 0.0, 1.0], "offset": 0.0}],
    "robots": [{"radius": 0.05, "position_limits": {"low": [-1.0, -1.0, 0.05], "high": [1.0, 1.0, 1.0]},
                "max_speed": 0.5}],
    "objects": [{"shape": "sphere", "radius": 0.1, "mass": 1.0}],
    "friction_mu": 0.5,
}

TWO_SPHERES_SCENE = {
    "name": "two_spheres_test",
    "static_surfaces": [{"name": "floor", "normal": [0.0, 0.0, 1.0], "offset": 0.0}],
    "robots": [{"radius": 0.05, "position_limits": {"low": [-1.0, -1.0, 0.05], "high": [1.0, 1.0, 1.0]},
                "max_speed": 0.5}],
    "objects": [{"shape": "sphere", "radius": 0.1, "mass": 1.0},
                {"shape": "sphere", "radius": 0.1, "mass": 1.0}],
    "friction_mu": 0.5,
}

NO_SURFACE_SCENE = {
    "name": "free_space_test",
    "static_surfaces": [],
    "robots": [{"radius": 0.05, "position_limits": {"low": [-1.0, -1.0, -1.0], "high": [1.0, 1.0, 1.0]},
                "max_speed": 0.5}],
    "objects": [{"shape": "sphere", "radius": 0.1, "mass": 2.0}],
    "friction_mu": 0.5,
}


def floor_scene(**changes) -> SceneSpec:
    return get_scene({**FLOOR_SCENE, **changes})


def sphere_on_floor(x: float = 0.0, y: float = 0.0, robot=(0.6, 0.6, 0.5)) -> SystemState:
    return SystemState.at_rest(np.array(robot, dtype=float), [[x, y, 0.1]])


def fake_stable_states(configs: list[SystemState]) -> list[StableState]:
    """StableStates around given configurations; the planner never checks their contacts."""
    assignment = ContactAssignment(contacts=(("object0", "floor"),))
    return [
        StableState(config=c, assignment=assignment,
                    contact_vars=[ContactVariable(point=np.zeros(3), force=np.zeros(3))],
                    residual_norm=0.0, id=i)
        for i, c in enumerate(configs)
    ]


def random_floor_states(rng: np.random.Generator, m: int) -> list[StableState]:
    """Spheres resting on the floor of FLOOR_SCENE at random places, robot at random places."""
    configs = []
    for _ in range(m):
        x, y = rng.uniform(-0.5, 0.5, size=2)
        robot = rng.uniform([-0.9, -0.9, 0.3], [0.9, 0.9, 0.9])
        configs.append(sphere_on_floor(x, y, robot))
    return fake_stable_states(configs)
