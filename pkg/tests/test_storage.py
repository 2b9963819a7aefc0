from __future__ import annotations

import importlib.util
import json
from pathlib import Path

import numpy as np
import pytest

from ltebid.agents.budget import run_budget_episode
from ltebid.config import AgentConstants
from ltebid.env import build_preset
from ltebid.harness.constants import ROUND_LOG_COLUMNS
from ltebid.harness.schemas import RunSummary, SummaryMetrics
from ltebid.harness.storage import (
    OutputError,
    emit_outputs,
    parse_round_logs,
    read_summary,
    round_logs_csv,
    write_round_logs,
    write_summary,
)
from ltebid.types import AgentKind, Mode, RoundLog


def _logs(record_contexts: bool = False) -> list[list[RoundLog]]:
    spec = build_preset("default", horizon=40)
    constants = AgentConstants().resolve(spec.dimension, spec.horizon, spec.noise)
    return [
        run_budget_episode(
            spec, constants, np.random.default_rng(seed), env_seed=seed, record_contexts=record_contexts
        )
        for seed in (1, 2)
    ]


def _summary() -> RunSummary:
    metrics = SummaryMetrics(
        replication=0,
        rounds=40,
        cumulative_reward=3.5,
        realized_reward=3.0,
        benchmark_value=4.0,
        regret=0.5,
        realized_regret=1.0,
        spend=2.25,
        margin_sum=1.25,
        flag_counts={"mesh": 3},
    )
    return RunSummary(
        mode=Mode.UNC,
        agent_kind=AgentKind.LTE,
        environment="default",
        horizon=40,
        seed=0,
        replications=1,
        benchmark_value_per_round=0.1,
        benchmark_value_se=0.01,
        mean_regret=0.5,
        se_regret=0.0,
        mean_realized_regret=1.0,
        mean_spend=2.25,
        max_spend=2.25,
        replicates=[metrics],
    )


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_round_logs_survive_export_and_parse(tmp_path: Path, fmt: str) -> None:
    logs = _logs(record_contexts=True)
    output_path = tmp_path / f"rounds.{fmt}"
    assert write_round_logs(logs, output_path, fmt) == sum(len(episode) for episode in logs)
    assert parse_round_logs(output_path) == logs


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_empty_episodes_are_kept_when_the_count_is_known(tmp_path: Path, fmt: str) -> None:
    logs = [*_logs(), []]
    output_path = tmp_path / f"rounds.{fmt}"
    write_round_logs(logs, output_path, fmt)
    assert parse_round_logs(output_path, replications=3) == logs
    assert len(parse_round_logs(output_path)) == 2

    write_round_logs([[]], output_path, fmt)
    assert parse_round_logs(output_path, replications=1) == [[]]
    assert parse_round_logs(output_path) == []

    write_round_logs(logs, output_path, fmt)
    with pytest.raises(ValueError):
        parse_round_logs(output_path, replications=1)


def test_csv_header_matches_the_column_contract(tmp_path: Path) -> None:
    output_path = tmp_path / "rounds.csv"
    write_round_logs(_logs(), output_path)
    header = output_path.read_bytes().split(b"\r\n", 1)[0].decode("utf-8")
    assert header.split(",") == list(ROUND_LOG_COLUMNS)


def test_empty_export_is_header_only() -> None:
    text = round_logs_csv([])
    assert text == ",".join(ROUND_LOG_COLUMNS) + "\r\n"


def test_unknown_format_is_rejected(tmp_path: Path) -> None:
    with pytest.raises(ValueError):
        write_round_logs(_logs(), tmp_path / "rounds.xlsx", "xlsx")
    with pytest.raises(ValueError):
        parse_round_logs(tmp_path / "rounds.xlsx")


@pytest.mark.skipif(
    importlib.util.find_spec("pandas") is None or importlib.util.find_spec("pyarrow") is None,
    reason="parquet export requires pandas and pyarrow",
)
def test_parquet_round_trip(tmp_path: Path) -> None:
    logs = _logs()
    output_path = tmp_path / "rounds.parquet"
    write_round_logs(logs, output_path, "parquet")
    assert parse_round_logs(output_path) == logs


def test_summary_json_is_sorted_and_valid(tmp_path: Path) -> None:
    summary = _summary()
    output_path = tmp_path / "summary.json"
    write_summary(summary, output_path)

    text = output_path.read_text(encoding="utf-8")
    payload = json.loads(text)
    assert list(payload) == sorted(payload)
    assert payload["schema_version"] == summary.schema_version
    assert read_summary(output_path) == summary


def test_write_into_a_file_path_raises_output_error(tmp_path: Path) -> None:
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    with pytest.raises(OutputError):
        write_summary(_summary(), blocker / "summary.json")


def test_emit_outputs_is_byte_deterministic(tmp_path: Path) -> None:
    first = emit_outputs(_logs(), _summary(), tmp_path / "a")
    second = emit_outputs(_logs(), _summary(), tmp_path / "b")
    for key in ("rounds", "summary"):
        assert first[key].read_bytes() == second[key].read_bytes()
    assert sorted(path.name for path in (tmp_path / "a").iterdir()) == ["rounds.csv", "summary.json"]


def test_emit_outputs_leaves_nothing_behind_on_failure(tmp_path: Path) -> None:
    out_dir = tmp_path / "out"
    out_dir.mkdir()
    (out_dir / "summary.json").mkdir()
    with pytest.raises(OutputError):
        emit_outputs(_logs(), _summary(), out_dir)
    assert not (out_dir / "rounds.csv").exists()
