from __future__ import annotations

import math

import numpy as np

from ltebid.agents.episode import BidDecision, Outcome, Stopped, settle
from ltebid.env.benchmark import BenchmarkPolicy
from ltebid.env.model import RoundSample
from ltebid.types import Phase


class _SpendTracker:
    """Shared budget bookkeeping with the same predictable stop rule as the learning agent."""

    def __init__(self, budget: float | None) -> None:
        self.constrained = budget is not None and math.isfinite(budget)
        self.budget = float(budget) if self.constrained else math.inf
        self.spend = 0.0
        self.rounds = 0
        self.stopped_at: int | None = None

    def stop(self) -> Stopped | None:
        if self.stopped_at is None and self.constrained and self.spend > self.budget - 1.0:
            self.stopped_at = self.rounds + 1
        return Stopped(self.stopped_at) if self.stopped_at is not None else None

    def observe(self, decision: BidDecision, sample: RoundSample) -> Outcome:
        outcome = settle(decision.bid, sample)
        self.spend += outcome.payment
        self.rounds += 1
        return outcome


class UniformBidder(_SpendTracker):
    """Bids uniformly at random over the grid; the linear-regret control."""

    def __init__(self, grid: np.ndarray, rng: np.random.Generator, budget: float | None = None) -> None:
        super().__init__(budget)
        self.grid = grid
        self.rng = rng

    def step(self, x: np.ndarray) -> BidDecision | Stopped:
        stopped = self.stop()
        if stopped is not None:
            return stopped
        bid = float(self.grid[self.rng.integers(len(self.grid))])
        return BidDecision(t=self.rounds + 1, phase=Phase.MAIN, x=x, bid=bid)


class BenchmarkBidder(_SpendTracker):
    """Replays the stationary comparator; regret against itself is zero up to Monte Carlo error."""

    def __init__(self, policy: BenchmarkPolicy, budget: float | None = None) -> None:
        super().__init__(budget)
        self.policy = policy

    def step(self, x: np.ndarray) -> BidDecision | Stopped:
        stopped = self.stop()
        if stopped is not None:
            return stopped
        return BidDecision(
            t=self.rounds + 1,
            phase=Phase.MAIN,
            x=x,
            bid=self.policy.bid(x),
            dual=self.policy.dual_scalar,
        )
