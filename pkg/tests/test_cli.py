"""End-to-end command tests on a small space: outputs, errors, determinism."""

import json
import os

import pytest
from click.testing import CliRunner

from banditsim.cli import main
from banditsim.fidelity import load_posterior, warm_start
from banditsim.config import load_fidelity_space
from banditsim.orchestrator import read_records

FIDELITY_YAML = """\
settings:
  - name: simulation_rate
    type: discrete
    values: [2, 5, 10]
    high_fidelity_value: 10
  - name: lidar_disable_shot_noise
    type: discrete
    values: [true, false]
    high_fidelity_value: false
  - name: lidar_subsample_count
    type: discrete
    values: [1, 3, 5]
    high_fidelity_value: 5
  - name: camera_view_distance
    type: continuous
    lo: 10.0
    hi: 5000.0
    bins: 3
    scale: log-uniform
    high_fidelity_value: 5000.0
"""

SCENARIO_YAML = """\
scenarios:
  - id: t1
    split: train
    params:
      - {name: initial_gap, type: continuous, lo: 4.0, hi: 24.0, bins: 4}
      - {name: speed, type: discrete, values: [8, 10, 12]}
  - id: t2
    split: train
    params:
      - {name: initial_gap, type: continuous, lo: 5.0, hi: 30.0, bins: 4}
      - {name: speed, type: discrete, values: [10, 14]}
  - id: h1
    split: test
    params:
      - {name: initial_gap, type: continuous, lo: 4.0, hi: 24.0, bins: 4}
      - {name: speed, type: discrete, values: [8, 12]}
"""

RUN_YAML = """\
fidelity_space: fidelity.yaml
scenario_space: scenarios.yaml
budget: 0.4
phases:
  meta_train:
    iterations: 25
    seed: 5
  evaluate:
    iterations: 8
    seed: 9
  meta_test:
    iterations: 8
    seed: 11
  baseline:
    iterations: 25
    seed: 13
"""

META_TRAIN_OUTPUTS = (
    "records_meta_train.jsonl",
    "records_baseline.jsonl",
    "posterior.json",
    "report.json",
    "trials.csv",
    "curves.csv",
    "failures_over_cost.png",
    "fidelity_posterior.png",
)


@pytest.fixture()
def config_path(tmp_path):
    (tmp_path / "fidelity.yaml").write_text(FIDELITY_YAML)
    (tmp_path / "scenarios.yaml").write_text(SCENARIO_YAML)
    path = tmp_path / "run.yaml"
    path.write_text(RUN_YAML)
    return str(path)


def invoke(*args):
    return CliRunner().invoke(main, list(args))


def meta_train(config_path, out):
    result = invoke("meta-train", "--config", config_path, "--out", str(out))
    assert result.exit_code == 0, result.output
    return result


class TestMetaTrain:
    def test_writes_all_outputs(self, config_path, tmp_path):
        out = tmp_path / "run"
        meta_train(config_path, out)
        for name in META_TRAIN_OUTPUTS:
            assert (out / name).exists(), name
        assert not [d for d in os.listdir(out) if d.startswith(".stage-")]

    def test_record_counts_match_plan(self, config_path, tmp_path):
        out = tmp_path / "run"
        meta_train(config_path, out)
        assert len(read_records(str(out / "records_meta_train.jsonl"))) == 25
        assert len(read_records(str(out / "records_baseline.jsonl"))) == 25

    def test_deterministic_across_directories(self, config_path, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        meta_train(config_path, out1)
        meta_train(config_path, out2)
        for name in ("records_meta_train.jsonl", "records_baseline.jsonl", "posterior.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_seed_override_changes_records(self, config_path, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        meta_train(config_path, out1)
        result = invoke(
            "meta-train", "--config", config_path, "--out", str(out2), "--seed", "99"
        )
        assert result.exit_code == 0, result.output
        assert (out1 / "records_meta_train.jsonl").read_bytes() != (
            out2 / "records_meta_train.jsonl"
        ).read_bytes()

    def test_workers_flag_is_result_invariant(self, config_path, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        meta_train(config_path, out1)
        result = invoke(
            "meta-train", "--config", config_path, "--out", str(out2), "--workers", "2"
        )
        assert result.exit_code == 0, result.output
        assert (out1 / "records_meta_train.jsonl").read_bytes() == (
            out2 / "records_meta_train.jsonl"
        ).read_bytes()

    def test_missing_fidelity_file_names_path(self, config_path, tmp_path):
        os.unlink(os.path.join(os.path.dirname(config_path), "fidelity.yaml"))
        result = invoke("meta-train", "--config", config_path, "--out", str(tmp_path / "o"))
        assert result.exit_code != 0
        assert "fidelity.yaml" in result.output

    def test_zero_iterations_writes_prior_only_posterior(self, config_path, tmp_path):
        path = config_path.replace("run.yaml", "run0.yaml")
        with open(config_path) as handle:
            text = handle.read()
        with open(path, "w") as handle:
            handle.write(
                text.replace("iterations: 25\n    seed: 5", "iterations: 0\n    seed: 5")
                .replace("iterations: 25\n    seed: 13", "iterations: 0\n    seed: 13")
            )
        out = tmp_path / "zero"
        result = invoke("meta-train", "--config", path, "--out", str(out))
        assert result.exit_code == 0, result.output
        assert (out / "records_meta_train.jsonl").read_text() == ""
        doc = load_posterior(str(out / "posterior.json"))
        assert all(
            a == 1.0 and b == 1.0
            for s in doc["settings"]
            for a, b in zip(s["alpha"], s["beta"])
        )
        # No trials means no defined metrics, so no report files.
        assert not (out / "report.json").exists()

    def test_posterior_out_redirects_posterior(self, config_path, tmp_path):
        out = tmp_path / "run"
        target = tmp_path / "elsewhere" / "trained.json"
        result = invoke(
            "meta-train",
            "--config",
            config_path,
            "--out",
            str(out),
            "--posterior-out",
            str(target),
        )
        assert result.exit_code == 0, result.output
        assert target.exists()
        assert not (out / "posterior.json").exists()
        space = load_fidelity_space(
            os.path.join(os.path.dirname(config_path), "fidelity.yaml")
        )
        warm_start(space, load_posterior(str(target)))


class TestEvaluate:
    def test_requires_posterior(self, config_path, tmp_path):
        result = invoke("evaluate", "--config", config_path, "--out", str(tmp_path / "o"))
        assert result.exit_code != 0
        assert "posterior" in result.output

    def test_runs_from_trained_posterior(self, config_path, tmp_path):
        out = tmp_path / "run"
        meta_train(config_path, out)
        result = invoke(
            "evaluate",
            "--config",
            config_path,
            "--out",
            str(out),
            "--posterior-in",
            str(out / "posterior.json"),
        )
        assert result.exit_code == 0, result.output
        records = read_records(str(out / "records_evaluate.jsonl"))
        assert len(records) == 8
        report = json.loads((out / "report.json").read_text())
        assert 0.0 <= report["tp_rate"] <= 1.0
        assert "evaluate" in report["curves"]
        # Baseline records sit in the same directory, so the comparison ran.
        assert "baseline" in report["curves"]

    def test_trials_csv_row_count(self, config_path, tmp_path):
        out = tmp_path / "run"
        meta_train(config_path, out)
        result = invoke(
            "evaluate",
            "--config",
            config_path,
            "--out",
            str(out),
            "--posterior-in",
            str(out / "posterior.json"),
        )
        assert result.exit_code == 0, result.output
        lines = (out / "trials.csv").read_text().splitlines()
        assert lines[0].startswith("kind,phase,iteration,scenario_id")
        assert len(lines) == 1 + 8


class TestMetaTest:
    def test_warm_requires_posterior(self, config_path, tmp_path):
        result = invoke(
            "meta-test",
            "--config",
            config_path,
            "--out",
            str(tmp_path / "o"),
            "--mode",
            "warm",
        )
        assert result.exit_code != 0
        assert "posterior" in result.output

    def test_uniform_then_warm_reports_both_curves(self, config_path, tmp_path):
        out = tmp_path / "run"
        meta_train(config_path, out)
        result = invoke(
            "meta-test", "--config", config_path, "--out", str(out), "--mode", "uniform"
        )
        assert result.exit_code == 0, result.output
        assert (out / "records_meta_test_uniform.jsonl").exists()
        result = invoke(
            "meta-test",
            "--config",
            config_path,
            "--out",
            str(out),
            "--mode",
            "warm",
            "--posterior-in",
            str(out / "posterior.json"),
        )
        assert result.exit_code == 0, result.output
        report = json.loads((out / "report.json").read_text())
        assert "meta_test_warm" in report["curves"]
        assert "meta_test_uniform" in report["curves"]

    def test_modes_differ_only_by_prior(self, config_path, tmp_path):
        out = tmp_path / "run"
        meta_train(config_path, out)
        invoke("meta-test", "--config", config_path, "--out", str(out), "--mode", "uniform")
        invoke(
            "meta-test",
            "--config",
            config_path,
            "--out",
            str(out),
            "--mode",
            "warm",
            "--posterior-in",
            str(out / "posterior.json"),
        )
        uniform = read_records(str(out / "records_meta_test_uniform.jsonl"))
        warm = read_records(str(out / "records_meta_test_warm.jsonl"))
        assert len(uniform) == len(warm) == 8
        # Same seed and held-out split, so the scenario stream is shared.
        assert [r.scenario_id for r in uniform] == [r.scenario_id for r in warm]


class TestReportCommand:
    def test_rebuilds_deleted_report(self, config_path, tmp_path):
        out = tmp_path / "run"
        meta_train(config_path, out)
        original = (out / "report.json").read_bytes()
        os.unlink(out / "report.json")
        result = invoke("report", "--config", config_path, "--out", str(out))
        assert result.exit_code == 0, result.output
        assert (out / "report.json").read_bytes() == original

    def test_empty_directory_fails(self, config_path, tmp_path):
        result = invoke("report", "--config", config_path, "--out", str(tmp_path / "empty"))
        assert result.exit_code != 0
        assert "no record files" in result.output


class TestFailureAtomicity:
    def test_failed_command_leaves_no_outputs(self, config_path, tmp_path):
        out = tmp_path / "o"
        result = invoke(
            "evaluate",
            "--config",
            config_path,
            "--out",
            str(out),
            "--posterior-in",
            str(tmp_path / "absent.json"),
        )
        assert result.exit_code != 0
        assert not out.exists() or not [
            f for f in os.listdir(out) if not f.startswith(".")
        ]
