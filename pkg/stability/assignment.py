"""
Random contact assignments: which pairs of bodies touch in a stable state.
"""

import numpy as np

from functions.errors import ValidationError
from physics.types import SceneSpec
from stability.types import ContactAssignment


def admissible_pairs(scene: SceneSpec) -> list[tuple[str, str]]:
    """
    Every pair that may carry a contact, in a fixed order: per object its
    surfaces, its robots, then the objects after it. Box-box pairs are excluded.
    """
    pairs = []
    for i, obj in enumerate(scene.objects):
        a = scene.object_id(i)
        pairs.extend((a, surface.name) for surface in scene.static_surfaces)
        pairs.extend((a, scene.robot_id(r)) for r in range(scene.n_robots))
        for j in range(i + 1, scene.n_objects):
            if obj.shape == "box" and scene.objects[j].shape == "box":
                continue
            pairs.append((a, scene.object_id(j)))
    return pairs


def sample_contact_assignment(scene: SceneSpec, rng: np.random.Generator,
                              count: int | None = None) -> ContactAssignment:
    """
    Draw 1 to 3 distinct contact pairs uniformly from the admissible ones.

    Args:
        scene (SceneSpec): The scene.
        rng (np.random.Generator): The assignment stream.
        count (int | None): Force the number of contacts; drawn uniformly from
            1..min(3, admissible) when None.

    Returns:
        ContactAssignment: pairs in admissible order.
    """
    if scene.n_objects == 0:
        raise ValidationError(f"Scene '{scene.name}' has no free object to stabilize.")
    pairs = admissible_pairs(scene)
    upper = min(3, len(pairs))
    if count is None:
        count = int(rng.integers(1, upper + 1))
    if not 1 <= count <= upper:
        raise ValidationError(f"Contact count {count} is outside 1..{upper} for scene '{scene.name}'.")
    chosen = np.sort(rng.choice(len(pairs), size=count, replace=False))
    return ContactAssignment(contacts=tuple(pairs[i] for i in chosen)).validate()
