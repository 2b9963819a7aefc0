from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ltebid.env.model import (
    EnvironmentSpec,
    RoundSample,
    expected_margin,
    expected_reward,
    realized_reward,
    sample_round,
    uplift,
)
from ltebid.learning.cdf import SplitCdfEstimate
from ltebid.types import Phase, RoundLog
from ltebid.utils import round_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Stopped:
    """Predictable stop: the budget check fired before round t was observed."""

    t: int


@dataclass
class BidDecision:
    """What an agent submits in round t, plus the diagnostics it planned with."""

    t: int
    phase: Phase
    x: np.ndarray
    bid: float
    estimate: SplitCdfEstimate | None = None
    f_hat: float | None = None
    uplift_hat: float | None = None
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
    flags: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Outcome:
    won: bool
    payment: float
    g_opt: float | None = None


class Bidder(Protocol):
    def step(self, x: np.ndarray) -> BidDecision | Stopped: ...

    def observe(self, decision: BidDecision, sample: RoundSample) -> Outcome: ...


def settle(bid: float, sample: RoundSample) -> Outcome:
    """First-price settlement; a tie with the competing bid is a win."""
    won = bid >= sample.m
    return Outcome(won=won, payment=bid if won else 0.0)


def round_log(
    spec: EnvironmentSpec,
    sample: RoundSample,
    decision: BidDecision,
    outcome: Outcome,
    *,
    record_context: bool = False,
) -> RoundLog:
    """Join an agent decision with environment truth at the played bid."""
    estimate = decision.estimate
    return RoundLog(
        t=decision.t,
        phase=decision.phase,
        x=[float(value) for value in sample.x] if record_context else None,
        bid=decision.bid,
        won=outcome.won,
        payment=outcome.payment,
        realized_reward=realized_reward(sample, decision.bid),
        expected_reward=float(expected_reward(spec, sample.x, decision.bid)),
        expected_margin=float(expected_margin(spec, sample.x, decision.bid)),
        uplift_true=float(uplift(spec, sample.x)),
        uplift_hat=decision.uplift_hat,
        f_hat=decision.f_hat,
        eval_size=0 if estimate is None or estimate.warm_start else estimate.size,
        epsilon=decision.epsilon,
        rho=decision.rho,
        beta=decision.beta,
        z=decision.z,
        branch=decision.branch,
        fallback=decision.fallback,
        fallback_reason=decision.fallback_reason,
        p_mix=decision.p_mix,
        dual=decision.dual,
        dual_ceiling=decision.dual_ceiling,
        hull_size=decision.hull_size,
        g_opt=outcome.g_opt,
        flags="|".join(decision.flags),
    )


def run_episode(
    spec: EnvironmentSpec,
    agent: Bidder,
    *,
    env_seed: int | None = None,
    record_contexts: bool = False,
) -> list[RoundLog]:
    """Drive one agent over the horizon; round t draws from stream (env_seed, t)."""
    seed = spec.seed if env_seed is None else env_seed
    logs: list[RoundLog] = []
    for t in range(1, spec.horizon + 1):
        sample = sample_round(spec, round_rng(seed, t))
        decision = agent.step(sample.x)
        if isinstance(decision, Stopped):
            logger.info("budget stop before round %d", decision.t)
            break
        outcome = agent.observe(decision, sample)
        logs.append(round_log(spec, sample, decision, outcome, record_context=record_contexts))
    return logs
