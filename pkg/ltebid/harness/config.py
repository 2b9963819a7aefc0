from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ltebid.config import AgentConstants, ResolvedConstants
from ltebid.env.model import EnvironmentSpec
from ltebid.env.presets import build_preset
from ltebid.types import AgentKind, Mode


class ValidationSettings(BaseModel):
    """Trial counts and thresholds for ``ltebid validate``."""

    model_config = ConfigDict(extra="forbid")

    spectral_trials: int = Field(default=1000, ge=1)
    spectral_rounds: int = Field(default=2000, ge=1)
    spectral_target: float = Field(default=0.99, ge=0.0, le=1.0)
    cdf_replications: int = Field(default=50, ge=1)
    cdf_horizon: int = Field(default=2000, ge=10)
    cdf_min_round: int = Field(default=200, ge=1)
    cdf_round_stride: int = Field(default=25, ge=1)
    cdf_bid_points: int = Field(default=200, ge=2)
    cdf_max_violation: float = Field(default=0.05, ge=0.0, le=1.0)
    coverage_replications: int = Field(default=5, ge=1)
    coverage_target: float = Field(default=0.95, ge=0.0, le=1.0)
    ipw_draws: int = Field(default=100_000, ge=100)
    ipw_max_z: float = Field(default=3.0, gt=0.0)
    slater_replications: int = Field(default=50, ge=1)
    slater_horizon: int = Field(default=10_000, ge=4)
    slater_target: float = Field(default=0.9, ge=0.0, le=1.0)


class SimulationConfig(BaseModel):
    """Everything one run needs; a single JSON file fully determines it."""

    model_config = ConfigDict(extra="forbid")

    environment: str | EnvironmentSpec = "default"
    horizon: int | None = Field(default=None, gt=1)
    mode: Mode = Mode.UNC
    budget: float | None = Field(default=None, ge=1.0)
    budget_fraction: float | None = Field(default=None, gt=0.0, le=1.0)
    ros_target: float | None = Field(default=None, ge=0.0)
    agent: AgentConstants = Field(default_factory=AgentConstants)
    agent_kind: AgentKind = AgentKind.LTE
    replications: int = Field(default=1, ge=1)
    seed: int = 0
    workers: int = Field(default=1, ge=1)
    benchmark_grid: int = Field(default=2048, ge=100)
    benchmark_samples: int = Field(default=4000, ge=1)
    record_contexts: bool = False
    out_dir: Path = Path("runs")
    round_format: Literal["csv", "jsonl", "parquet"] = "csv"
    horizons: list[int] = Field(default_factory=lambda: [1000, 4000, 16000])
    validation: ValidationSettings = Field(default_factory=ValidationSettings)

    @model_validator(mode="after")
    def _check_constraint(self) -> SimulationConfig:
        has_budget = self.budget is not None or self.budget_fraction is not None
        if self.mode is Mode.BGT and not has_budget:
            raise ValueError("mode bgt needs budget or budget_fraction")
        if self.mode is not Mode.BGT and has_budget:
            raise ValueError(f"budget is only valid in mode bgt, got mode {self.mode}")
        if self.budget is not None and self.budget_fraction is not None:
            raise ValueError("set either budget or budget_fraction, not both")
        spec = self.environment_spec()
        if self.budget is not None and self.budget > spec.horizon:
            raise ValueError(f"budget {self.budget} exceeds horizon {spec.horizon}")
        return self

    @property
    def environment_name(self) -> str:
        return self.environment if isinstance(self.environment, str) else "custom"

    def environment_spec(self) -> EnvironmentSpec:
        if isinstance(self.environment, str):
            spec = build_preset(self.environment, horizon=self.horizon or 1000, seed=self.seed)
        else:
            spec = self.environment
        update: dict[str, Any] = {}
        if self.horizon is not None:
            update["horizon"] = self.horizon
        if self.ros_target is not None:
            update["ros_target"] = self.ros_target
        return spec.model_copy(update=update) if update else spec

    def resolved_budget(self, horizon: int) -> float | None:
        if self.budget is not None:
            return self.budget
        if self.budget_fraction is not None:
            return max(self.budget_fraction * horizon, 1.0)
        return None

    def constants(self) -> ResolvedConstants:
        spec = self.environment_spec()
        return self.agent.resolve(spec.dimension, spec.horizon, spec.noise)


def load_config(path: Path | None) -> dict[str, Any]:
    """Read a JSON config into a raw dict; ``None`` yields the defaults."""
    if path is None:
        return {}
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(payload: dict[str, Any], assignments: list[str]) -> dict[str, Any]:
    """Apply ``dotted.key=value`` assignments; values parse as JSON when they can."""
    result = json.loads(json.dumps(payload, default=str))
    for assignment in assignments:
        key, sep, raw = assignment.partition("=")
        if not sep or not key:
            raise ValueError(f"override {assignment!r} is not of the form key=value")
        node = result
        parts = key.strip().split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                child = {}
                node[part] = child
            node = child
        node[parts[-1]] = _parse_value(raw)
    return result
