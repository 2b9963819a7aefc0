from __future__ import annotations

import json
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, computed_field

from ltebid.harness.constants import SCHEMA_VERSION
from ltebid.types import AgentKind, Mode, RoundLog


class SummaryMetrics(BaseModel):
    """Per-replication totals; regret is paired with the benchmark on the same contexts."""

    model_config = ConfigDict(extra="forbid")

    replication: int
    rounds: int
    stopped_at: int | None = None
    cumulative_reward: float
    realized_reward: float
    benchmark_value: float
    regret: float
    realized_regret: float
    spend: float
    budget: float | None = None
    margin_sum: float
    violation: float | None = None
    delta_1: float | None = None
    delta_2: float | None = None
    delta_2_bar: float | None = None
    coverage_rate: float | None = None
    fallback_count: int = 0
    mesh_violation_count: int = 0
    flag_counts: dict[str, int] = Field(default_factory=dict)
    delta_hat: float | None = None
    dual_ceiling: float | None = None
    dual_potential: float | None = None
    g_opt_sq_sum: float | None = None


class RunSummary(BaseModel):
    """Aggregate over replications, written as summary.json."""

    model_config = ConfigDict(extra="forbid")

    schema_version: str = SCHEMA_VERSION
    mode: Mode
    agent_kind: AgentKind
    environment: str
    horizon: int
    seed: int
    replications: int
    budget: float | None = None
    benchmark_dual: float | None = None
    benchmark_value_per_round: float
    benchmark_value_se: float
    mean_regret: float
    se_regret: float
    mean_realized_regret: float
    mean_spend: float
    max_spend: float
    mean_violation: float | None = None
    se_violation: float | None = None
    mean_shortfall: float | None = None
    mean_coverage: float | None = None
    replicates: list[SummaryMetrics]


class SweepRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    horizon: int
    mean_regret: float
    se_regret: float
    mean_violation: float | None = None
    se_violation: float | None = None
    mean_shortfall: float | None = None


class SweepSummary(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: str = SCHEMA_VERSION
    mode: Mode
    agent_kind: AgentKind
    regret_slope: float
    violation_slope: float | None = None
    rows: list[SweepRow]


class ValidationCheck(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    passed: bool
    statistic: float
    target: float
    trials: int
    details: dict[str, float] = Field(default_factory=dict)


class ValidationReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: str = SCHEMA_VERSION
    environment: str
    seed: int
    checks: list[ValidationCheck]

    @computed_field
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @computed_field
    @property
    def failures(self) -> list[str]:
        return [check.name for check in self.checks if not check.passed]


def export_cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, list):
        return json.dumps(value)
    return value


def round_log_row(log: RoundLog, replication: int) -> dict[str, Any]:
    """Flat export row; floats keep their repr so parsing restores them exactly."""
    row = {"schema_version": SCHEMA_VERSION, "replication": replication}
    row.update({name: export_cell(value) for name, value in log.model_dump(mode="python").items()})
    row["phase"] = log.phase.value
    return row


def round_log_from_row(row: dict[str, Any]) -> tuple[int, RoundLog]:
    payload = {key: value for key, value in row.items() if key not in {"schema_version", "replication"}}
    return int(row["replication"]), RoundLog.model_validate(payload)
