"""
Command line of the engine.

    uv run python main.py sample-stable --scene spheres_ramp --m 26
    uv run python main.py plan --scene spheres_ramp --method stage --seeds 0 1 2
    uv run python main.py evaluate STAGE_Data/runs/spheres_ramp_stage_0.jsonl
    uv run python main.py adjacency STAGE_Data/runs/spheres_ramp_stage_*.jsonl
    uv run python main.py ablate --scene spheres_cube --seeds 0 1 --sweeps n k

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

import argparse
import sys

from config.experiment import EMIT_FLAGS, METHODS, ExperimentConfig
from functions.errors import StageError, ValidationError
from functions.logger import log_run_event, log_separator

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _add_experiment_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML/JSON experiment file or a .meta.json sidecar")
    parser.add_argument("--scene", help="built-in scene name or scene file")
    parser.add_argument("--method", choices=METHODS)
    parser.add_argument("--m", type=int, help="number of stable states |C_s|")
    parser.add_argument("--n-max", dest="n_max", type=int, help="iteration budget")
    parser.add_argument("--k", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--n-candidates", dest="n_candidates", type=int)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--d-min", dest="d_min", type=float)
    parser.add_argument("--w-obj", dest="w_obj", type=float)
    parser.add_argument("--w-rob", dest="w_rob", type=float)
    parser.add_argument("--w-vel", dest="w_vel", type=float)
    parser.add_argument("--stable-sample-prob", dest="stable_sample_prob", type=float)
    parser.add_argument("--no-node-rejection", dest="node_rejection", action="store_const", const=False)
    parser.add_argument("--compare-to-best", dest="compare_to_best", action="store_const", const=True)
    parser.add_argument("--goal-bias", dest="goal_bias", type=float)
    parser.add_argument("--ps-horizon", dest="ps_horizon", type=int)
    parser.add_argument("--ps-iterations", dest="ps_iterations", type=int)
    parser.add_argument("--ps-samples", dest="ps_samples", type=int)
    parser.add_argument("--max-attempts", dest="max_attempts_per_state", type=int)
    parser.add_argument("--stable-seed", dest="stable_seed", type=int)
    parser.add_argument("--stable-states", dest="stable_states_file", help="C_s JSON-lines file")
    parser.add_argument("--seeds", type=int, nargs="+")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--emit", nargs="+", choices=EMIT_FLAGS)
    parser.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Stability-guided exploration of contact-rich scenes.")
    commands = parser.add_subparsers(dest="command", required=True)

    _add_experiment_flags(commands.add_parser("sample-stable", help="sample the stable-state set C_s"))
    _add_experiment_flags(commands.add_parser("plan", help="run a method for every seed"))

    evaluate = commands.add_parser("evaluate", help="recompute metrics from stored path files")
    evaluate.add_argument("paths", nargs="+")
    _add_experiment_flags(evaluate)

    adjacency = commands.add_parser("adjacency", help="adjacency matrix and heatmap of path files")
    adjacency.add_argument("paths", nargs="+")
    _add_experiment_flags(adjacency)

    ablate = commands.add_parser("ablate", help="StaGE variants and parameter sweeps")
    _add_experiment_flags(ablate)
    ablate.add_argument("--sweeps", nargs="+", choices=("n", "k", "m"))
    ablate.add_argument("--stable-sizes", dest="stable_sizes", type=int, nargs="+")
    return parser


_NOT_CONFIG = {"command", "config", "paths"}


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    return config.with_overrides(**overrides).resolve()


def _fmt(value) -> str:
    if value is None or value != value:
        return "-"
    return f"{value:.3f}" if isinstance(value, float) else str(value)


def _print_table(table):
    print(table.to_string(index=False, na_rep="-"))


def cmd_sample_stable(config: ExperimentConfig, command: str) -> int:
    from functions.runner import sample_stable

    states, stats, path = sample_stable(config, command)
    summary = stats.summary()
    print(f"{len(states)} stable states written to {path}")
    print(f"   attempts: {summary['total_attempts']} | success rate: {summary['success_rate']:.3f}")
    for budget, found in summary["found_within"].items():
        print(f"   found within {budget:>3} attempts: {found}/{len(states)}")
    return EXIT_OK


def cmd_plan(config: ExperimentConfig, command: str) -> int:
    from functions.runner import plan

    outcomes, table = plan(config, command)
    for outcome in outcomes:
        if outcome.error:
            print(f"seed {outcome.seed}: {outcome.error}")
            continue
        report = outcome.result.report
        print(f"seed {outcome.seed}: count {report.path_count} | coverage {_fmt(report.coverage_pct)} "
              f"| entropy {_fmt(report.entropy_nats)} | hausdorff {_fmt(report.avg_hausdorff)}")
    if table is not None:
        _print_table(table[table["seed"] == "mean"])
    return EXIT_RUNTIME if any(o.error for o in outcomes) else EXIT_OK


def cmd_evaluate(config: ExperimentConfig, command: str, paths: list[str]) -> int:
    from functions.runner import evaluate

    _, table = evaluate(config, paths, command)
    _print_table(table)
    return EXIT_OK


def cmd_adjacency(config: ExperimentConfig, command: str, paths: list[str]) -> int:
    from functions.runner import adjacency

    matrix = adjacency(config, paths, command=command)
    print(f"adjacency {matrix.shape[0]}x{matrix.shape[1]}, {int(matrix.sum())} paths")
    return EXIT_OK


def cmd_ablate(config: ExperimentConfig, command: str) -> int:
    from functions.runner import ablate

    _, summary, _ = ablate(config, command)
    _print_table(summary)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    command = " ".join(["main.py"] + list(argv if argv is not None else sys.argv[1:]))
    log_separator(command)
    try:
        config = load_config(args)
        if args.command == "sample-stable":
            return cmd_sample_stable(config, command)
        if args.command == "plan":
            return cmd_plan(config, command)
        if args.command == "evaluate":
            return cmd_evaluate(config, command, args.paths)
        if args.command == "adjacency":
            return cmd_adjacency(config, command, args.paths)
        return cmd_ablate(config, command)
    except ValidationError as e:
        log_run_event("ERROR", error=str(e))
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except StageError as e:
        log_run_event("ERROR", error=str(e))
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
