"""
Per-command execution behind the CLI: obtaining C_s, running a method for each
seed, and writing every output file with its sidecar.

Seeds may run in a process pool; results are merged in seed order and every
file is written by this process only.
"""

from dataclasses import dataclass
from pathlib import Path

from config.experiment import ExperimentConfig
from functions.errors import StageError, ValidationError
from functions.helper_functions import make_streams, map_ordered
from functions.logger import log_run_event, log_workflow_step
from functions.reports import adjacency_matrix, write_adjacency_csv, write_metrics_csv, write_ppm
from functions.serialization import (
    load_paths, load_stable_states, read_json, meta_path, save_paths, save_stable_states, write_json, write_meta,
)

METRICS_FILE = "metrics.csv"


def output_dir(config: ExperimentConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def stable_states_path(config: ExperimentConfig) -> Path:
    if config.stable_states_file:
        return Path(config.stable_states_file)
    return output_dir(config) / f"{config.scene_name}_stable_states.jsonl"


def run_file(config: ExperimentConfig, method: str, seed: int, suffix: str = ".jsonl") -> Path:
    return output_dir(config) / f"{config.scene_name}_{method}_{seed}{suffix}"


def sample_stable(config: ExperimentConfig, command: str = "sample-stable"):
    """
    Sample C_s with the stable seed and write it with its sidecar.

    Returns:
        tuple[list[StableState], SamplingStats, Path]
    """
    from stability.sampler import sample_stable_states_with_stats

    scene = config.scene_spec()
    log_workflow_step("SAMPLE", f"{scene.name} m={config.m} seed={config.stable_seed}")
    states, stats = sample_stable_states_with_stats(config.m, scene, make_streams(config.stable_seed),
                                                    config.max_attempts_per_state)
    path = stable_states_path(config)
    save_stable_states(path, states)
    write_meta(path, config.to_dict(), command, seed=config.stable_seed, extra={"sampling": stats.summary()})
    return states, stats, path


def obtain_stable_states(config: ExperimentConfig, command: str) -> list:
    """
    C_s from the configured file, the scene's default file, or sampled inline.
    A longer file is cut to its first m states.
    """
    path = stable_states_path(config)
    if path.exists():
        states = load_stable_states(path)
    elif config.stable_states_file:
        raise ValidationError(f"Stable-state file not found: {path}")
    else:
        states, _, _ = sample_stable(config, command)
    if len(states) < config.m:
        raise ValidationError(f"{path} holds {len(states)} stable states, m = {config.m}.")
    return states[:config.m]


@dataclass(frozen=True, eq=False)
class SeedTask:
    config: ExperimentConfig
    seed: int
    stable_states: tuple


@dataclass(eq=False)
class SeedOutcome:
    seed: int
    result: object = None   # RunResult
    error: str = ""


def run_seed(task: SeedTask) -> SeedOutcome:
    """One seed of the configured method. Engine errors are returned, not raised."""
    from baselines.predictive_sampling import run_predictive_sampling_all
    from baselines.rrt_sim import run_planner

    config = task.config
    scene = config.scene_spec()
    streams = make_streams(task.seed)
    planner_config = config.planner_config(task.seed)
    log_run_event("HEADER", scene=scene.name, method=config.method, seed=task.seed)
    try:
        if config.method == "predictive_sampling":
            result = run_predictive_sampling_all(config.baseline_config(), planner_config, list(task.stable_states),
                                                 scene, streams)
        else:
            result = run_planner(planner_config, list(task.stable_states), scene, streams, method=config.method,
                                 keep_tree="tree" in config.emit)
    except StageError as e:
        log_run_event("ERROR", scene=scene.name, method=config.method, seed=task.seed, error=str(e))
        return SeedOutcome(seed=task.seed, error=f"{type(e).__name__}: {e}")
    return SeedOutcome(seed=task.seed, result=result)


def write_run_outputs(config: ExperimentConfig, result, scene, command: str):
    """Paths, tree and metrics files of one (method, seed) cell, each with a sidecar."""
    resolved = config.to_dict()
    extra = {"root_id": result.root_id, "budget": result.budget}
    if config.method == "rrt_sim":
        extra["goal_bias"] = config.goal_bias
    if "paths" in config.emit:
        path = save_paths(run_file(config, result.method, result.seed), result.paths, scene.n_robots, scene.n_objects)
        write_meta(path, resolved, command, seed=result.seed, extra={**extra, "method": result.method})
    if "tree" in config.emit and result.tree is not None:
        path = write_json(run_file(config, result.method, result.seed, "_tree.json"), result.tree.to_dict())
        write_meta(path, resolved, command, seed=result.seed, extra={**extra, "method": result.method})
    if "metrics" in config.emit:
        path = write_json(run_file(config, result.method, result.seed, "_metrics.json"), result.report.to_dict())
        write_meta(path, resolved, command, seed=result.seed, extra={**extra, "method": result.method})


def write_metrics(config: ExperimentConfig, results, command: str):
    rows = [r.report.to_row(config.scene_name, r.method, r.seed) for r in results]
    path = output_dir(config) / METRICS_FILE
    table = write_metrics_csv(path, rows, append=True)
    write_meta(path, config.to_dict(), command)
    return table


def write_adjacency(config: ExperimentConfig, paths, m: int, method: str, command: str):
    matrix = adjacency_matrix(paths, m)
    stem = output_dir(config) / f"adjacency_{config.scene_name}_{method}"
    csv_path = write_adjacency_csv(stem.with_suffix(".csv"), matrix)
    ppm_path = write_ppm(stem.with_suffix(".ppm"), matrix)
    for path in (csv_path, ppm_path):
        write_meta(path, config.to_dict(), command, extra={"method": method})
    return matrix


def plan(config: ExperimentConfig, command: str = "plan"):
    """
    Run the configured method for every seed and write the outputs.

    Returns:
        tuple[list[SeedOutcome], pandas.DataFrame | None]: outcomes in seed
            order and the metrics table (None when no seed succeeded).
    """
    scene = config.scene_spec()
    stable_states = obtain_stable_states(config, command)
    log_workflow_step("PLAN", f"{scene.name} method={config.method} seeds={config.seeds}")
    tasks = [SeedTask(config=config, seed=seed, stable_states=tuple(stable_states)) for seed in config.seeds]
    outcomes = map_ordered(run_seed, tasks, config.workers)

    results = [o.result for o in outcomes if o.result is not None]
    for result in results:
        write_run_outputs(config, result, scene, command)
    table = write_metrics(config, results, command) if results else None
    if "adjacency" in config.emit and results:
        write_adjacency(config, [p for r in results for p in r.paths], len(stable_states), config.method, command)
    return outcomes, table


def _meta_of(path: Path) -> dict:
    sidecar = meta_path(path)
    if not sidecar.exists():
        raise ValidationError(f"{path} has no sidecar {sidecar.name}; cannot tell its method and seed.")
    return read_json(sidecar)


def evaluate(config: ExperimentConfig, path_files: list[str], command: str = "evaluate"):
    """
    Recompute MetricsReports from stored path files. Coverage comes from the
    paths, which equals the tree value for extracted or filtered paths.
    """
    from metrics.metrics import evaluate_paths
    from planner.distance import StateMetric

    scene = config.scene_spec()
    stable_states = obtain_stable_states(config, command)
    metric = StateMetric.for_scene(scene, config.planner_config(0).weights)
    rows, reports = [], []
    for name in path_files:
        meta = _meta_of(Path(name))
        seed, method = int(meta["seed"]), meta.get("method", config.method)
        report = evaluate_paths(load_paths(name), len(stable_states), metric, make_streams(seed).entropy)
        reports.append((method, seed, report))
        rows.append(report.to_row(config.scene_name, method, seed))
    if not rows:
        raise ValidationError("evaluate needs at least one path file.")
    path = output_dir(config) / METRICS_FILE
    table = write_metrics_csv(path, rows, append=True)
    write_meta(path, config.to_dict(), command)
    return reports, table


def adjacency(config: ExperimentConfig, path_files: list[str], method: str | None = None,
              command: str = "adjacency"):
    stable_states = obtain_stable_states(config, command)
    paths = [p for name in path_files for p in load_paths(name)]
    return write_adjacency(config, paths, len(stable_states), method or config.method, command)


def ablate(config: ExperimentConfig, command: str = "ablate"):
    """Ablation grid over the configured seeds; per-cell path files plus the metrics CSV."""
    from baselines.ablation import grid_table, run_ablation_grid, summarize

    scene = config.scene_spec()
    stable_states = obtain_stable_states(config, command)
    log_workflow_step("ABLATE", f"{scene.name} seeds={config.seeds} sweeps={config.sweeps}")
    base = config.planner_config(config.seeds[0])
    results = run_ablation_grid(scene, stable_states, config.seeds, base, sweeps=tuple(config.sweeps),
                                stable_sizes=tuple(config.stable_sizes), workers=config.workers)
    if "paths" in config.emit:
        for result in results:
            path = save_paths(run_file(config, result.method, result.seed), result.paths,
                              scene.n_robots, scene.n_objects)
            write_meta(path, config.to_dict(), command, seed=result.seed,
                       extra={"method": result.method, "root_id": result.root_id, "budget": result.budget})
    table = write_metrics(config, results, command)
    return results, summarize(grid_table(results, config.scene_name)), table
