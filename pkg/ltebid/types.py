from __future__ import annotations

import json
from enum import StrEnum
from typing import Any

from pydantic import BaseModel, ConfigDict, field_validator


class Mode(StrEnum):
    """Constraint regime of an episode."""

    UNC = "unc"
    BGT = "bgt"
    ROS = "ros"


class Phase(StrEnum):
    MAIN = "main"
    BURN_IN = "burn_in"
    PHASE2 = "phase2"


class AgentKind(StrEnum):
    LTE = "lte"
    UNIFORM = "uniform"
    BENCHMARK = "benchmark"


def _optional_float(value: Any) -> float | None:
    if value in (None, ""):
        return None
    return float(value)


def _as_bool(value: Any) -> bool:
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in {"", "0", "false", "no", "off", "n"}:
            return False
        if lowered in {"1", "true", "yes", "on", "y"}:
            return True
    return bool(value)


class RoundLog(BaseModel):
    """One executed auction round, as seen by the harness.

    Truth columns (``expected_reward``, ``expected_margin``, ``uplift_true``) are
    filled by the episode driver from the environment; agents never read them.
    The validators accept the string cells produced by the CSV writer.
    """

    model_config = ConfigDict(extra="forbid")

    t: int
    phase: Phase
    x: list[float] | None = None
    bid: float
    won: bool
    payment: float
    realized_reward: float
    expected_reward: float
    expected_margin: float
    uplift_true: float
    uplift_hat: float | None = None
    f_hat: float | None = None
    eval_size: int = 0
    epsilon: float | None = None
    rho: float | None = None
    beta: float | None = None
    z: float | None = None
    branch: int | None = None
    fallback: bool = False
    fallback_reason: str | None = None
    p_mix: float | None = None
    dual: float | None = None
    dual_ceiling: float | None = None
    hull_size: int | None = None
    g_opt: float | None = None
    flags: str = ""

    @field_validator(
        "uplift_hat",
        "f_hat",
        "epsilon",
        "rho",
        "beta",
        "z",
        "p_mix",
        "dual",
        "dual_ceiling",
        "g_opt",
        mode="before",
    )
    @classmethod
    def _normalize_optional_float(cls, value: Any) -> float | None:
        return _optional_float(value)

    @field_validator("branch", "hull_size", mode="before")
    @classmethod
    def _normalize_optional_int(cls, value: Any) -> int | None:
        if value in (None, ""):
            return None
        return int(value)

    @field_validator("won", "fallback", mode="before")
    @classmethod
    def _normalize_bool(cls, value: Any) -> bool:
        return _as_bool(value)

    @field_validator("fallback_reason", mode="before")
    @classmethod
    def _normalize_reason(cls, value: Any) -> str | None:
        if value in (None, ""):
            return None
        return str(value)

    @field_validator("x", mode="before")
    @classmethod
    def _normalize_context(cls, value: Any) -> list[float] | None:
        if value in (None, ""):
            return None
        if isinstance(value, str):
            value = json.loads(value)
        return [float(item) for item in value]

    @field_validator("flags", mode="before")
    @classmethod
    def _normalize_flags(cls, value: Any) -> str:
        if value is None:
            return ""
        if isinstance(value, (list, tuple)):
            return "|".join(str(item) for item in value)
        return str(value)

    def has_flag(self, name: str) -> bool:
        return name in self.flags.split("|")
