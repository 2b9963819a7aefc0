from __future__ import annotations

import math
from pathlib import Path

import pytest
from pydantic import ValidationError

from ltebid.harness.config import (
    SimulationConfig,
    ValidationSettings,
    apply_overrides,
    load_config,
)
from ltebid.harness.runner import bench, run
from ltebid.harness.sweep import fit_loglog_slope, sweep
from ltebid.types import AgentKind, Mode


def _config(**overrides: object) -> SimulationConfig:
    payload: dict[str, object] = {
        "horizon": 200,
        "replications": 2,
        "seed": 7,
        "benchmark_grid": 256,
        "benchmark_samples": 500,
    }
    payload.update(overrides)
    return SimulationConfig.model_validate(payload)


def test_run_is_deterministic_for_a_seed() -> None:
    first = run(_config())
    second = run(_config())
    assert first.summary == second.summary
    assert first.logs == second.logs
    assert [item.replication for item in first.summary.replicates] == [0, 1]
    assert first.summary.mean_violation is None


def test_replications_pair_against_their_own_contexts() -> None:
    result = run(_config())
    first, second = result.summary.replicates
    assert first.benchmark_value != second.benchmark_value


@pytest.mark.parametrize("fraction", [0.5, 0.1])
def test_budget_runs_never_overspend(fraction: float) -> None:
    result = run(_config(mode="bgt", budget_fraction=fraction))
    budget = fraction * 200
    assert result.summary.budget == pytest.approx(budget)
    for metrics in result.summary.replicates:
        assert metrics.spend <= budget
        if metrics.stopped_at is not None:
            assert metrics.rounds == metrics.stopped_at - 1


def test_benchmark_bidder_has_no_paired_regret() -> None:
    result = run(_config(agent_kind="benchmark"))
    for metrics in result.summary.replicates:
        assert abs(metrics.regret) < 1e-6 * 200


def test_uniform_baseline_trails_the_benchmark() -> None:
    result = run(_config(agent_kind="uniform", horizon=400))
    assert result.summary.mean_regret > 0.0


def test_ros_run_reports_violation_and_dual_diagnostics() -> None:
    result = run(_config(mode="ros", environment="generous_slater", horizon=400, replications=1))
    summary = result.summary
    assert summary.mean_violation is not None and summary.mean_violation >= 0.0
    assert summary.mean_shortfall is not None
    metrics = summary.replicates[0]
    assert metrics.dual_ceiling is not None
    assert metrics.dual_potential == pytest.approx(math.log(metrics.dual_ceiling) * math.sqrt(400))
    assert metrics.flag_counts.get("unsafe_bid", 0) == 0


def test_fit_loglog_slope_of_a_square_root_series() -> None:
    horizons = [1000, 4000, 16000]
    assert fit_loglog_slope(horizons, [math.sqrt(h) for h in horizons]) == pytest.approx(0.5)
    assert fit_loglog_slope(horizons, [0.0, 0.0, 0.0]) == pytest.approx(0.0)


def test_sweep_needs_three_horizons() -> None:
    with pytest.raises(ValueError):
        sweep(_config(), horizons=[100, 200, 200])


def test_sweep_rows_follow_the_horizon_grid() -> None:
    summary = sweep(_config(replications=1), horizons=[200, 100, 150], agent_kind=AgentKind.UNIFORM)
    assert [row.horizon for row in summary.rows] == [100, 150, 200]
    assert summary.agent_kind is AgentKind.UNIFORM
    assert math.isfinite(summary.regret_slope)
    assert summary.violation_slope is None


@pytest.mark.parametrize(
    "payload",
    [
        {"mode": "bgt"},
        {"mode": "unc", "budget": 10.0},
        {"mode": "bgt", "budget": 10.0, "budget_fraction": 0.5},
        {"mode": "bgt", "horizon": 100, "budget": 500.0},
        {"horizon": 100, "unknown": 1},
    ],
)
def test_config_rejects_inconsistent_constraints(payload: dict[str, object]) -> None:
    with pytest.raises(ValidationError):
        SimulationConfig.model_validate(payload)


def test_overrides_parse_json_and_nest() -> None:
    payload = apply_overrides({"agent": {"c_eps": 0.5}}, ["agent.c_r=4", "mode=bgt", "budget_fraction=0.25"])
    assert payload == {"agent": {"c_eps": 0.5, "c_r": 4}, "mode": "bgt", "budget_fraction": 0.25}
    config = SimulationConfig.model_validate(payload)
    assert config.agent.c_r == 4.0
    with pytest.raises(ValueError):
        apply_overrides({}, ["no-equals-sign"])


def test_load_config_reports_bad_json(tmp_path: Path) -> None:
    path = tmp_path / "config.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValueError):
        load_config(path)
    assert load_config(None) == {}


def test_validation_defaults_use_the_acceptance_trial_counts() -> None:
    settings = ValidationSettings()
    assert settings.spectral_trials == 1000
    assert settings.cdf_replications == 50
    assert settings.slater_replications == 50
    assert settings.slater_horizon == 10_000
    assert SimulationConfig().validation == settings


def test_bench_times_every_mode() -> None:
    timings = bench(_config(horizon=100, replications=1))
    assert [timing.mode for timing in timings] == list(Mode)
    assert all(timing.elapsed_ms >= 0 for timing in timings)
    assert all(timing.rounds <= 100 for timing in timings)


@pytest.mark.slow
def test_worker_pool_matches_serial_run() -> None:
    serial = run(_config(replications=3))
    parallel = run(_config(replications=3, workers=2))
    assert serial.summary == parallel.summary
    assert serial.logs == parallel.logs
