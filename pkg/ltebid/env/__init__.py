from __future__ import annotations

from ltebid.env.benchmark import BenchmarkPolicy, benchmark_policy, slater_margin
from ltebid.env.contexts import ContextKind, ContextLaw
from ltebid.env.model import (
    EnvironmentSpec,
    MisconfiguredEnvironment,
    RoundSample,
    context_at,
    expected_cost,
    expected_margin,
    expected_reward,
    realized_reward,
    sample_round,
    true_win_prob,
    uplift,
)
from ltebid.env.noise import NoiseFamily, NoiseModel
from ltebid.env.presets import PRESET_NAMES, build_preset

__all__ = [
    "PRESET_NAMES",
    "BenchmarkPolicy",
    "ContextKind",
    "ContextLaw",
    "EnvironmentSpec",
    "MisconfiguredEnvironment",
    "NoiseFamily",
    "NoiseModel",
    "RoundSample",
    "benchmark_policy",
    "build_preset",
    "context_at",
    "expected_cost",
    "expected_margin",
    "expected_reward",
    "realized_reward",
    "sample_round",
    "slater_margin",
    "true_win_prob",
    "uplift",
]
