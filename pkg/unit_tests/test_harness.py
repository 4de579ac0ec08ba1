"""
Tests for the experiment harness: configuration, report files and the
command line.

Run: uv run pytest unit_tests/test_harness.py
"""

import sys
from pathlib import Path as FilePath

# Add parent directory to path for imports
sys.path.insert(0, str(FilePath(__file__).parent.parent))

import numpy as np
import pandas as pd
import pytest

from config.experiment import ExperimentConfig
from functions import helper_functions
from functions.errors import UnknownGoalIdError, ValidationError
from functions.reports import (
    ZERO_COLOR, adjacency_matrix, read_adjacency_csv, read_metrics_csv, write_adjacency_csv, write_metrics_csv,
    write_ppm,
)
from functions.serialization import (
    load_paths, load_stable_states, meta_path, portable_command, read_json, save_stable_states, write_json, write_jsonl,
    write_meta,
)
from main import EXIT_INVALID, EXIT_OK, main
from planner.types import Path
from unit_tests.helpers import FLOOR_SCENE, random_floor_states, sphere_on_floor


def _path(start_id, goal_id) -> Path:
    return Path(states=np.array([sphere_on_floor().to_vector()]), actions=[], goal_id=goal_id, start_id=start_id)


def _row(method, seed, count):
    return {"scene": "floor_test", "method": method, "seed": seed, "count": count, "coverage": 10.0 * count,
            "entropy": None if count == 0 else 0.1 * count, "avg_hausdorff": 1.0 / 3.0}


# --- Configuration ---

def test_resolve_fills_defaults_and_embeds_scene():
    config = ExperimentConfig(scene=FLOOR_SCENE, m=3, seeds=[0, 1]).resolve()
    assert isinstance(config.scene, dict) and config.scene["name"] == "floor_test"
    assert config.scene_name == "floor_test"
    assert config.n_max > 0
    assert config.epsilon > 0 and config.d_min == config.epsilon
    assert ExperimentConfig.from_dict(config.to_dict()).resolve() == config


def test_overrides_ignore_missing_values():
    config = ExperimentConfig().with_overrides(m=4, k=None, seeds=[3])
    assert (config.m, config.k, config.seeds) == (4, ExperimentConfig().k, [3])


@pytest.mark.parametrize("changes", [
    {"m": 0},
    {"method": "dijkstra"},
    {"seeds": []},
    {"seeds": [-1]},
    {"emit": ["pictures"]},
    {"n": 9, "n_candidates": 8},
    {"epsilon": -1.0},
    {"scene": "no_such_scene"},
])
def test_invalid_configs_are_rejected(changes):
    with pytest.raises(ValidationError):
        ExperimentConfig(**{"scene": FLOOR_SCENE, **changes}).resolve()


def test_unknown_fields_are_rejected():
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"scene": "spheres_ramp", "budget": 10})


def test_method_planner_configs():
    base = ExperimentConfig(scene=FLOOR_SCENE, m=3, k=4, n=3, goal_bias=0.4)
    rrt = base.with_overrides(method="rrt_sim").resolve().planner_config(7)
    assert (rrt.k, rrt.n, rrt.stable_sample_prob, rrt.seed) == (1, 1, 0.4, 7)
    assert not rrt.require_progress and not rrt.node_rejection
    assert base.with_overrides(method="no_knn").resolve().planner_config(0).k == 1
    assert base.with_overrides(method="uniform_80").resolve().planner_config(0).stable_sample_prob == pytest.approx(0.2)
    assert base.resolve().planner_config(0).k == 4


def test_sidecar_is_accepted_as_config(tmp_path):
    config = ExperimentConfig(scene=FLOOR_SCENE, m=3, seeds=[2]).resolve()
    target = write_json(tmp_path / "run.json", {})
    sidecar = write_meta(target, config.to_dict(), "plan", seed=2)
    assert sidecar == meta_path(target) and sidecar.name == "run.json.meta.json"
    assert read_json(sidecar)["file"] == "run.json"
    assert ExperimentConfig.from_file(sidecar) == config


@pytest.mark.parametrize("command", [
    "main.py plan --m 4 --output-dir /tmp/a --seeds 0",
    "main.py plan --m 4 --output-dir=/tmp/b --seeds 0",
])
def test_sidecar_command_drops_output_dir(command):
    assert portable_command(command) == "main.py plan --m 4 --seeds 0"


def test_yaml_config_file(tmp_path):
    document = tmp_path / "experiment.yaml"
    document.write_text("scene: spheres_cube\nmethod: no_rejection\nm: 5\nseeds: [0, 2]\n", encoding="utf-8")
    config = ExperimentConfig.from_file(document)
    assert (config.scene, config.method, config.m, config.seeds) == ("spheres_cube", "no_rejection", 5, [0, 2])
    with pytest.raises(ValidationError):
        ExperimentConfig.from_file(tmp_path / "missing.yaml")


# --- Record files ---

def test_stable_state_file_round_trip(tmp_path):
    states = random_floor_states(np.random.default_rng(0), 3)
    path = save_stable_states(tmp_path / "cs.jsonl", states)
    loaded = load_stable_states(path)
    assert [s.id for s in loaded] == [0, 1, 2]
    for a, b in zip(states, loaded):
        assert np.array_equal(a.config.to_vector(), b.config.to_vector())
        assert a.assignment == b.assignment


def test_stable_state_file_must_be_numbered(tmp_path):
    records = [s.to_dict() for s in random_floor_states(np.random.default_rng(0), 2)]
    records[1]["id"] = 5
    path = write_jsonl(tmp_path / "cs.jsonl", records)
    with pytest.raises(ValidationError):
        load_stable_states(path)


def test_metrics_csv_has_mean_rows(tmp_path):
    path = tmp_path / "metrics.csv"
    write_metrics_csv(path, [_row("stage", 0, 2), _row("stage", 1, 4)])
    table = read_metrics_csv(path)
    assert list(table["seed"]) == ["0", "1", "mean"]
    mean = table[table["seed"] == "mean"].iloc[0]
    assert mean["count"] == 3.0 and mean["coverage"] == 30.0
    assert table.loc[0, "avg_hausdorff"] == 1.0 / 3.0


def test_metrics_csv_append_replaces_cells(tmp_path):
    path = tmp_path / "metrics.csv"
    write_metrics_csv(path, [_row("stage", 0, 2), _row("stage", 1, 4)])
    write_metrics_csv(path, [_row("rrt_sim", 0, 0), _row("stage", 1, 6)], append=True)
    table = read_metrics_csv(path)
    assert list(zip(table["method"], table["seed"])) == [
        ("stage", "0"), ("stage", "1"), ("stage", "mean"), ("rrt_sim", "0"), ("rrt_sim", "mean"),
    ]
    assert table.loc[2, "count"] == 4.0
    assert pd.isna(table.loc[3, "entropy"])


def test_metrics_csv_rejects_foreign_columns(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        read_metrics_csv(path)


def test_adjacency_example(tmp_path):
    paths = [_path(0, 1), _path(0, 1), _path(0, 2), _path(3, 0)]
    matrix = adjacency_matrix(paths, 4)
    assert matrix[0].tolist() == [0, 2, 1, 0]
    assert matrix[3].tolist() == [1, 0, 0, 0]
    assert matrix.sum() == 4
    csv_path = write_adjacency_csv(tmp_path / "adjacency.csv", matrix)
    assert np.array_equal(read_adjacency_csv(csv_path), matrix)


def test_adjacency_rejects_unknown_goal():
    with pytest.raises(UnknownGoalIdError):
        adjacency_matrix([_path(0, 4)], 4)


def test_ppm_header_and_colors(tmp_path):
    matrix = np.array([[0, 2, 1], [0, 0, 0], [0, 0, 0]])
    data = write_ppm(tmp_path / "heat.ppm", matrix).read_bytes()
    header = b"P6\n3 3\n255\n"
    assert data.startswith(header)
    pixels = np.frombuffer(data[len(header):], dtype=np.uint8).reshape(3, 3, 3)
    assert tuple(pixels[0, 0]) == ZERO_COLOR
    assert tuple(pixels[0, 1]) == (255, 0, 0)
    assert tuple(pixels[0, 2]) == (255, 128, 128)
    assert tuple(pixels[2, 2]) == ZERO_COLOR


# --- Command line ---

@pytest.fixture
def cli_inputs(tmp_path):
    scene_file = write_json(tmp_path / "floor_test.json", FLOOR_SCENE)
    stable_file = save_stable_states(tmp_path / "cs.jsonl", random_floor_states(np.random.default_rng(0), 4))
    return ["--scene", str(scene_file), "--stable-states", str(stable_file), "--m", "4", "--n-max", "6",
            "--n-candidates", "4", "--n", "2", "--k", "2", "--seeds", "0", "1"]


def test_invalid_m_exits_with_validation_code(tmp_path, cli_inputs):
    assert main(["plan"] + cli_inputs + ["--m", "0", "--output-dir", str(tmp_path / "out")]) == EXIT_INVALID


def test_plan_is_byte_identical_across_reruns(tmp_path, cli_inputs):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["plan"] + cli_inputs + ["--output-dir", str(out)]) == EXIT_OK
        outputs.append(out)
    for file in ("floor_test_stage_0.jsonl", "floor_test_stage_1.jsonl", "metrics.csv",
                 "floor_test_stage_1.jsonl.meta.json", "metrics.csv.meta.json"):
        assert (outputs[0] / file).read_bytes() == (outputs[1] / file).read_bytes()
    meta = read_json(outputs[0] / "floor_test_stage_1.jsonl.meta.json")
    assert meta["seed"] == 1 and meta["method"] == "stage"
    assert meta["config"]["n_max"] == 6
    assert "output_dir" not in meta["config"] and "--output-dir" not in meta["command"]


def test_plan_with_worker_processes_matches_serial_run(tmp_path, cli_inputs):
    serial, pooled = tmp_path / "serial", tmp_path / "pooled"
    assert main(["plan"] + cli_inputs + ["--workers", "1", "--output-dir", str(serial)]) == EXIT_OK
    assert main(["plan"] + cli_inputs + ["--workers", "2", "--output-dir", str(pooled)]) == EXIT_OK
    for file in ("floor_test_stage_0.jsonl", "floor_test_stage_1.jsonl", "metrics.csv"):
        assert (serial / file).read_bytes() == (pooled / file).read_bytes()


def test_worker_pool_spawns_its_processes(monkeypatch):
    started = []

    class RecordingPool:
        def __init__(self, max_workers, mp_context):
            started.append((max_workers, mp_context.get_start_method()))

        def __enter__(self):
            return self

        def __exit__(self, *exc):
            return False

        def map(self, fn, items):
            return map(fn, items)

    monkeypatch.setattr(helper_functions, "ProcessPoolExecutor", RecordingPool)
    assert helper_functions.map_ordered(abs, [-1, -2, 3], workers=4) == [1, 2, 3]
    assert started == [(3, "spawn")]


def test_evaluate_reproduces_plan_metrics(tmp_path, cli_inputs):
    out = tmp_path / "out"
    assert main(["plan"] + cli_inputs + ["--output-dir", str(out)]) == EXIT_OK
    before = read_metrics_csv(out / "metrics.csv")
    paths = [str(out / "floor_test_stage_0.jsonl"), str(out / "floor_test_stage_1.jsonl")]
    assert main(["evaluate"] + paths + cli_inputs + ["--output-dir", str(out)]) == EXIT_OK
    after = read_metrics_csv(out / "metrics.csv")
    pd.testing.assert_frame_equal(before, after)
    assert len(load_paths(paths[0])) == int(before.loc[0, "count"])


def test_evaluate_needs_sidecar(tmp_path, cli_inputs):
    orphan = write_jsonl(tmp_path / "orphan.jsonl", [])
    assert main(["evaluate", str(orphan)] + cli_inputs + ["--output-dir", str(tmp_path / "out")]) == EXIT_INVALID


def test_adjacency_and_ablate_commands(tmp_path, cli_inputs):
    out = tmp_path / "out"
    assert main(["plan"] + cli_inputs + ["--output-dir", str(out)]) == EXIT_OK
    paths = [str(out / "floor_test_stage_0.jsonl"), str(out / "floor_test_stage_1.jsonl")]
    assert main(["adjacency"] + paths + cli_inputs + ["--output-dir", str(out)]) == EXIT_OK
    matrix = read_adjacency_csv(out / "adjacency_floor_test_stage.csv")
    assert matrix.shape == (4, 4)
    assert (out / "adjacency_floor_test_stage.ppm").exists()
    assert (out / "adjacency_floor_test_stage.ppm.meta.json").exists()

    ablation_out = tmp_path / "ablation"
    assert main(["ablate"] + cli_inputs + ["--seeds", "0", "--output-dir", str(ablation_out)]) == EXIT_OK
    table = read_metrics_csv(ablation_out / "metrics.csv")
    assert list(dict.fromkeys(table["method"])) == ["stage", "no_rejection", "no_n_best", "no_knn", "uniform_80"]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
