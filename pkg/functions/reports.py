"""
Report files: the metrics CSV, adjacency matrices and their heatmaps.
"""

from pathlib import Path

import numpy as np
import pandas as pd

from functions.errors import UnknownGoalIdError, ValidationError
from functions.logger import log_run_event

CSV_COLUMNS = ["scene", "method", "seed", "count", "coverage", "entropy", "avg_hausdorff"]
METRIC_COLUMNS = ["count", "coverage", "entropy", "avg_hausdorff"]
MEAN_LABEL = "mean"
ZERO_COLOR = (0, 0, 255)


def metrics_table(rows: list[dict]) -> pd.DataFrame:
    """Per-seed rows followed, per (scene, method), by a mean row."""
    per_seed = pd.DataFrame(rows, columns=CSV_COLUMNS)
    per_seed["seed"] = per_seed["seed"].astype(str)
    per_seed = per_seed[per_seed["seed"] != MEAN_LABEL]
    if per_seed.empty:
        return per_seed.reset_index(drop=True)
    for column in METRIC_COLUMNS:
        per_seed[column] = pd.to_numeric(per_seed[column])
    blocks = []
    for (scene, method), group in per_seed.groupby(["scene", "method"], sort=False):
        mean = {"scene": scene, "method": method, "seed": MEAN_LABEL}
        mean.update(group[METRIC_COLUMNS].mean().to_dict())
        blocks.append(group)
        blocks.append(pd.DataFrame([mean], columns=CSV_COLUMNS))
    return pd.concat(blocks, ignore_index=True)


def read_metrics_csv(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"Metrics file not found: {path}")
    table = pd.read_csv(path, dtype={"scene": str, "method": str, "seed": str}, float_precision="round_trip")
    if list(table.columns) != CSV_COLUMNS:
        raise ValidationError(f"{path} has columns {list(table.columns)}, expected {CSV_COLUMNS}.")
    return table


def write_metrics_csv(path: str | Path, rows: list[dict], append: bool = False) -> pd.DataFrame:
    """
    Write the metrics CSV. With append, rows of an existing file are kept
    unless the new rows replace the same (scene, method, seed) cell; the mean
    rows are recomputed.
    """
    path = Path(path)
    new = pd.DataFrame(rows, columns=CSV_COLUMNS)
    new["seed"] = new["seed"].astype(str)
    if append and path.exists():
        old = read_metrics_csv(path)
        old = old[old["seed"] != MEAN_LABEL]
        keys = set(zip(new["scene"], new["method"], new["seed"]))
        keep = [key not in keys for key in zip(old["scene"], old["method"], old["seed"])]
        new = pd.concat([old[keep], new], ignore_index=True)
    table = metrics_table(new.to_dict("records"))
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False)
    log_run_event("SAVED", file=str(path), rows=len(table))
    return table


def adjacency_matrix(paths, m: int) -> np.ndarray:
    """
    Counts of retained paths from stable state i (the start) to stable state j.

    Raises:
        UnknownGoalIdError: A path refers to a stable id outside 0..m-1.
    """
    matrix = np.zeros((m, m), dtype=int)
    for path in paths:
        for stable_id in (path.start_id, path.goal_id):
            if not 0 <= stable_id < m:
                raise UnknownGoalIdError(f"Path refers to stable state {stable_id}, C_s has ids 0..{m - 1}.")
        matrix[path.start_id, path.goal_id] += 1
    return matrix


def write_adjacency_csv(path: str | Path, matrix: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = list(range(matrix.shape[0]))
    pd.DataFrame(matrix, index=labels, columns=labels).to_csv(path, index_label="start")
    log_run_event("SAVED", file=str(path))
    return path


def read_adjacency_csv(path: str | Path) -> np.ndarray:
    return pd.read_csv(path, index_col="start").to_numpy(dtype=int)


def heatmap_pixels(matrix: np.ndarray) -> np.ndarray:
    """
    (m, m, 3) uint8 image: white to red with the count, zero cells in the
    sentinel blue.
    """
    peak = max(int(matrix.max()), 1) if matrix.size else 1
    t = matrix.astype(float) / peak
    fade = np.round(255.0 * (1.0 - t)).astype(np.uint8)
    pixels = np.stack([np.full_like(fade, 255), fade, fade], axis=-1)
    pixels[matrix == 0] = ZERO_COLOR
    return pixels


def write_ppm(path: str | Path, matrix: np.ndarray) -> Path:
    """Binary portable pixmap (P6), one pixel per cell."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = heatmap_pixels(matrix)
    height, width = matrix.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())
    log_run_event("SAVED", file=str(path))
    return path
