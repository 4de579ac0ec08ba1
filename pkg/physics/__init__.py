"""
Physics Module

Deterministic sphere/box simulator with the two built-in sphere scenes.

Usage:
    from physics import get_scene, step, ActionCommand

    scene = get_scene("spheres_ramp")
    action = ActionCommand.clamped([[0.1, 0.0, 0.0]], 0.25, scene)
    next_state = step(state, action, scene)
"""

from .types import ActionCommand, ContactPair, ContactReport, HalfSpace, ObjectSpec, RobotSpec, SceneSpec, SystemState
from .simulator import contact_report, min_separation, rollout, rollout_candidates, rollout_plans, step
from .scenes import available_scenes, get_scene

__all__ = [
    "ActionCommand",
    "ContactPair",
    "ContactReport",
    "HalfSpace",
    "ObjectSpec",
    "RobotSpec",
    "SceneSpec",
    "SystemState",
    "available_scenes",
    "contact_report",
    "get_scene",
    "min_separation",
    "rollout",
    "rollout_candidates",
    "rollout_plans",
    "step",
]
