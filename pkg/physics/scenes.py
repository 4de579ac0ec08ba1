"""
Built-in scenes and scene loading.

To edit the built-in scenes, check the config/scenes.yaml document.
"""

import json
from pathlib import Path

import yaml

from config.paths import SCENES_FILE
from functions.errors import ValidationError
from physics.types import SceneSpec

try:
    with open(SCENES_FILE, "r", encoding="UTF-8") as f:
        SCENE_DOCUMENTS = yaml.safe_load(f)
except FileNotFoundError:
    raise FileNotFoundError(f"Scene file not found at {SCENES_FILE}")


def available_scenes() -> list[str]:
    return sorted(SCENE_DOCUMENTS)


def get_scene(scene: str | dict | SceneSpec) -> SceneSpec:
    """
    Factory function to resolve a scene reference.

    Args:
        scene: A built-in scene name, a path to a JSON/YAML scene document, an
            inline scene document, or an existing SceneSpec.

    Returns:
        SceneSpec: The validated scene.

    Raises:
        ValidationError: If the scene is unknown or invalid.
    """
    if isinstance(scene, SceneSpec):
        return scene.validate()
    if isinstance(scene, dict):
        return SceneSpec.from_dict(scene, name=scene.get("name", "inline"))
    if scene in SCENE_DOCUMENTS:
        return SceneSpec.from_dict(SCENE_DOCUMENTS[scene], name=scene)
    path = Path(scene)
    if path.suffix in (".json", ".yaml", ".yml") and path.exists():
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f) if path.suffix == ".json" else yaml.safe_load(f)
        return SceneSpec.from_dict(document, name=path.stem)
    raise ValidationError(f"Unknown scene: {scene}. Supported: {', '.join(available_scenes())} or a scene file.")
