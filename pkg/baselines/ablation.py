"""
Ablation grid: StaGE and its named variants over a list of seeds, plus
optional sweeps over n, k and the size of C_s.

Every cell runs the same planner code path; a variant is only a set of
PlannerConfig overrides.
"""

from dataclasses import dataclass, replace

import pandas as pd

from config.constants import SWEEP_VALUES, UNIFORM_VARIANT_STABLE_PROB
from functions.errors import ValidationError
from functions.helper_functions import make_streams, map_ordered
from functions.logger import log_run_event
from functions.reports import CSV_COLUMNS, METRIC_COLUMNS
from physics.types import SceneSpec
from planner.types import PlannerConfig
from stability.types import StableState

from .rrt_sim import run_planner
from .types import RunResult

VARIANTS = {
    "stage": {},
    "no_rejection": {"node_rejection": False},
    "no_n_best": {"n": 1},
    "no_knn": {"k": 1},
    "uniform_80": {"stable_sample_prob": UNIFORM_VARIANT_STABLE_PROB},
}

SWEEP_PARAMETERS = ("n", "k", "m")


def variant_config(config: PlannerConfig, name: str) -> PlannerConfig:
    if name not in VARIANTS:
        raise ValidationError(f"Unknown variant: {name}. Supported: {', '.join(VARIANTS)}")
    return replace(config, **VARIANTS[name])


@dataclass(frozen=True, eq=False)
class AblationCell:
    method: str
    config: PlannerConfig
    scene: SceneSpec
    stable_states: tuple[StableState, ...]


def _run_cell(cell: AblationCell) -> RunResult:
    log_run_event("HEADER", scene=cell.scene.name, method=cell.method, seed=cell.config.seed)
    return run_planner(cell.config, list(cell.stable_states), cell.scene, make_streams(cell.config.seed),
                       method=cell.method, keep_tree=False)


def grid_cells(scene: SceneSpec, stable_states: list[StableState], seeds: list[int], config: PlannerConfig,
               sweeps: tuple[str, ...] = (), sweep_values: tuple[int, ...] = SWEEP_VALUES,
               stable_sizes: tuple[int, ...] = ()) -> list[AblationCell]:
    """
    Cells in output order: the five variants, then each requested sweep, each
    over all seeds. Sweep "m" uses prefixes of C_s of the sizes in stable_sizes.
    """
    if not seeds:
        raise ValidationError("The ablation grid needs at least one seed.")
    unknown = set(sweeps) - set(SWEEP_PARAMETERS)
    if unknown:
        raise ValidationError(f"Unknown sweep: {sorted(unknown)}. Supported: {', '.join(SWEEP_PARAMETERS)}")
    if "m" in sweeps and any(size < 2 or size > len(stable_states) for size in stable_sizes):
        raise ValidationError(f"C_s sizes must lie in 2..{len(stable_states)}, got {list(stable_sizes)}.")

    everything = tuple(stable_states)
    settings: list[tuple[str, PlannerConfig, tuple[StableState, ...]]] = [
        (name, variant_config(config, name), everything) for name in VARIANTS
    ]
    for parameter in sweeps:
        if parameter == "m":
            for size in stable_sizes:
                settings.append((f"sweep_m{size}", replace(config, m=size), everything[:size]))
        else:
            for value in sweep_values:
                settings.append((f"sweep_{parameter}{value}", replace(config, **{parameter: value}), everything))

    return [
        AblationCell(method=name, config=replace(cfg, seed=seed), scene=scene, stable_states=subset)
        for name, cfg, subset in settings
        for seed in seeds
    ]


def run_ablation_grid(scene: SceneSpec, stable_states: list[StableState], seeds: list[int], config: PlannerConfig,
                      sweeps: tuple[str, ...] = (), sweep_values: tuple[int, ...] = SWEEP_VALUES,
                      stable_sizes: tuple[int, ...] = (), workers: int = 1) -> list[RunResult]:
    """
    Run every cell of the grid. Results come back in cell order whatever the
    worker count.
    """
    cells = grid_cells(scene, stable_states, seeds, config, sweeps, sweep_values, stable_sizes)
    return map_ordered(_run_cell, cells, workers)


def grid_table(results: list[RunResult], scene: str) -> pd.DataFrame:
    """One metrics row per cell, CSV column order."""
    rows = [result.report.to_row(scene, result.method, result.seed) for result in results]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def summarize(table: pd.DataFrame) -> pd.DataFrame:
    """Mean of every metric per method, in first-appearance order."""
    numeric = table.assign(**{column: pd.to_numeric(table[column]) for column in METRIC_COLUMNS})
    means = numeric.groupby("method", sort=False)[METRIC_COLUMNS].mean()
    return means.reset_index()
