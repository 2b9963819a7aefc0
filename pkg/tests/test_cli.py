from __future__ import annotations

import json
from pathlib import Path

from typer.testing import CliRunner

from ltebid.cli import app
from ltebid.harness.schemas import RunSummary, ValidationReport
from ltebid.harness.storage import parse_round_logs

runner = CliRunner()

_SMALL = ["--horizon", "120", "--replications", "2", "--set", "benchmark_grid=256", "--set", "benchmark_samples=300"]


def _simulate(out_dir: Path, *extra: str) -> int:
    result = runner.invoke(app, ["simulate", "--out-dir", str(out_dir), "--seed", "3", *_SMALL, *extra])
    return result.exit_code


def test_simulate_writes_rounds_and_summary(tmp_path: Path) -> None:
    out_dir = tmp_path / "run"
    assert _simulate(out_dir) == 0

    summary = RunSummary.model_validate_json((out_dir / "summary.json").read_text(encoding="utf-8"))
    assert summary.horizon == 120
    assert summary.replications == 2
    logs = parse_round_logs(out_dir / "rounds.csv", replications=summary.replications)
    assert [len(episode) for episode in logs] == [120, 120]


def test_simulate_output_is_byte_identical_across_runs(tmp_path: Path) -> None:
    assert _simulate(tmp_path / "a", "--mode", "bgt", "--set", "budget_fraction=0.3") == 0
    assert _simulate(tmp_path / "b", "--mode", "bgt", "--set", "budget_fraction=0.3") == 0
    for name in ("rounds.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_jsonl_format(tmp_path: Path) -> None:
    assert _simulate(tmp_path, "--format", "jsonl", "--agent", "uniform") == 0
    assert (tmp_path / "rounds.jsonl").exists()
    assert not (tmp_path / "rounds.csv").exists()


def test_invalid_constraint_exits_with_code_2(tmp_path: Path) -> None:
    result = runner.invoke(app, ["simulate", "--out-dir", str(tmp_path), "--mode", "bgt", *_SMALL])
    assert result.exit_code == 2
    assert "Invalid configuration" in result.output
    assert not (tmp_path / "summary.json").exists()


def test_config_file_is_merged_with_flags(tmp_path: Path) -> None:
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps({"mode": "bgt", "budget_fraction": 0.5, "environment": "simplex"}), encoding="utf-8"
    )
    out_dir = tmp_path / "run"
    assert _simulate(out_dir, "--config", str(config_path)) == 0
    summary = RunSummary.model_validate_json((out_dir / "summary.json").read_text(encoding="utf-8"))
    assert summary.environment == "simplex"
    assert summary.budget == 60.0


def test_schema_command_prints_json() -> None:
    result = runner.invoke(app, ["schema", "round"])
    assert result.exit_code == 0
    assert "uplift_hat" in result.output
    assert runner.invoke(app, ["schema", "nope"]).exit_code != 0


def test_validate_writes_a_report(tmp_path: Path) -> None:
    settings = {
        "spectral_trials": 2,
        "spectral_rounds": 50,
        "cdf_replications": 1,
        "cdf_horizon": 60,
        "cdf_min_round": 20,
        "cdf_round_stride": 10,
        "cdf_bid_points": 11,
        "coverage_replications": 1,
        "ipw_draws": 1000,
    }
    assignments = [item for key, value in settings.items() for item in ("--set", f"validation.{key}={value}")]
    result = runner.invoke(
        app,
        ["validate", "--out-dir", str(tmp_path), "--horizon", "80", "--seed", "1", *assignments],
    )
    assert result.exit_code in (0, 1)
    report = ValidationReport.model_validate(
        {
            key: value
            for key, value in json.loads((tmp_path / "validation.json").read_text(encoding="utf-8")).items()
            if key not in {"passed", "failures"}
        }
    )
    assert result.exit_code == (0 if report.passed else 1)
    assert "slater_estimate" not in {check.name for check in report.checks}
