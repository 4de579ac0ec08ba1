"""
File formats of the harness: JSON documents, JSON-lines record files and the
`.meta.json` sidecar every output carries.

Floats are written with repr precision so reading a file back gives the exact
values, and nothing time-dependent is written, so reruns are byte-identical.
"""

import json
from pathlib import Path

import numpy as np

from functions.errors import ValidationError
from functions.logger import log_run_event


def _to_builtin(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _dumps(data, indent=None) -> str:
    return json.dumps(data, default=_to_builtin, indent=indent, ensure_ascii=False)


def meta_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def portable_command(command: str) -> str:
    """The command line without its `--output-dir` flag, which only names where files land."""
    words = command.split()
    kept = []
    skip = False
    for word in words:
        if skip:
            skip = False
        elif word == "--output-dir":
            skip = True
        elif not word.startswith("--output-dir="):
            kept.append(word)
    return " ".join(kept)


def write_meta(path: str | Path, config: dict, command: str, seed=None, extra: dict | None = None) -> Path:
    """
    Sidecar of `path`: the resolved config, the command and the seed. The
    output directory is left out so the same run written to two places has
    identical sidecars.
    """
    config = {key: value for key, value in config.items() if key != "output_dir"}
    document = {"file": Path(path).name, "command": portable_command(command), "seed": seed, "config": config}
    if extra:
        document.update(extra)
    target = meta_path(path)
    with open(target, "w", encoding="utf-8") as f:
        f.write(_dumps(document, indent=2) + "\n")
    return target


def write_json(path: str | Path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(_dumps(data, indent=2) + "\n")
    log_run_event("SAVED", file=str(path))
    return path


def read_json(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"File not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_jsonl(path: str | Path, records) -> Path:
    """One JSON document per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(_dumps(record) + "\n")
    log_run_event("SAVED", file=str(path))
    return path


def read_jsonl(path: str | Path) -> list:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"File not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            return [json.loads(line) for line in f if line.strip()]
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path} is not a JSON-lines file: {e}")


def save_stable_states(path: str | Path, states) -> Path:
    return write_jsonl(path, [s.to_dict() for s in states])


def load_stable_states(path: str | Path) -> list:
    from stability.types import StableState

    states = [StableState.from_dict(record) for record in read_jsonl(path)]
    if [s.id for s in states] != list(range(len(states))):
        raise ValidationError(f"Stable states in {path} are not numbered 0..{len(states) - 1}.")
    return states


def save_paths(path: str | Path, paths, n_robots: int, n_objects: int) -> Path:
    return write_jsonl(path, [p.to_dict(n_robots, n_objects) for p in paths])


def load_paths(path: str | Path) -> list:
    from planner.types import Path as PlannerPath

    return [PlannerPath.from_dict(record) for record in read_jsonl(path)]
