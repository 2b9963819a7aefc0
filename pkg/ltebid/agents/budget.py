from __future__ import annotations

import logging
import math

import numpy as np

from ltebid.agents.core import (
    BranchDecision,
    ModeParams,
    branch_scores,
    branch_ucbs,
    candidate_interval,
    first_argmax,
    safe_truncate,
    shadow_price,
    squarecb_choose,
)
from ltebid.agents.episode import BidDecision, Outcome, Stopped, run_episode
from ltebid.agents.learner import UpliftLearner
from ltebid.config import ResolvedConstants
from ltebid.env.model import EnvironmentSpec, RoundSample
from ltebid.learning.uplift import WlsState, confidence_radius
from ltebid.types import Mode, Phase, RoundLog

logger = logging.getLogger(__name__)


def budget_branch_oracle(
    x: np.ndarray,
    state: WlsState,
    grid: np.ndarray,
    f_grid: np.ndarray,
    epsilon: float,
    beta: float,
    gamma: float,
    kappa: float,
    c_br: float,
) -> BranchDecision:
    """Branch maximizers and candidate bracket under the pacing Lagrangian.

    ``c_br`` is the base constant; the bonus scales it by (1 + gamma).
    """
    if len(grid) == 0:
        raise ValueError("grid must be nonempty")
    theta_hat = state.theta_hat()
    s = float(x @ theta_hat)
    rho = confidence_radius(state, x, beta)
    a = 1.0 + gamma
    score_0, score_1 = branch_scores(f_grid, s, a, grid)
    ucb_0, ucb_1 = branch_ucbs(score_0, score_1, f_grid, rho, epsilon, c_br * (1.0 + gamma))
    decision = candidate_interval(ucb_0, ucb_1, grid, f_grid, kappa)
    inside = np.isin(grid, decision.candidates)
    _, first = np.unique(grid[inside], return_index=True)
    active = (score_1 if decision.branch == 1 else score_0)[inside][first]
    return BranchDecision(
        b_star_0=decision.b_star_0,
        b_star_1=decision.b_star_1,
        candidates=decision.candidates,
        branch=decision.branch,
        info_bid=decision.info_bid,
        scores=active,
        rho=rho,
    )


class BudgetAgent:
    """Budget-paced SquareCB agent; ``budget=None`` (or infinite) is the unconstrained mode.

    The stop rule S > B - 1 is checked before the round's context is used, and each
    payment is at most 1, so total spend never exceeds B.
    """

    def __init__(
        self,
        constants: ResolvedConstants,
        rng: np.random.Generator,
        budget: float | None = None,
    ) -> None:
        self.constants = constants
        self.rng = rng
        self.learner = UpliftLearner(constants, rng)
        self.constrained = budget is not None and math.isfinite(budget)
        self.budget = float(budget) if self.constrained else math.inf
        horizon = constants.horizon
        self.pacing_scale = max(horizon / self.budget, 1.0) if self.constrained else 1.0
        self.pace = self.budget / horizon if self.constrained else 0.0
        self.mode = Mode.BGT if self.constrained else Mode.UNC
        self.mu = constants.mu_init if self.constrained else 0.0
        self.spend = 0.0
        self.stopped_at: int | None = None
        self.r0 = self.learner.kappa / (4.0 * (1.0 + self.pacing_scale))
        self.grid = constants.grid

    @property
    def wls(self) -> WlsState:
        return self.learner.wls

    def exhausted(self) -> bool:
        return self.constrained and self.spend > self.budget - 1.0

    def step(self, x: np.ndarray) -> BidDecision | Stopped:
        t = self.learner.rounds + 1
        if self.stopped_at is not None or self.exhausted():
            if self.stopped_at is None:
                self.stopped_at = t
                logger.debug("spend %.4f > B - 1 at round %d", self.spend, t)
            return Stopped(self.stopped_at)

        c = self.constants
        plan = self.learner.plan(x)
        estimate = plan.estimate
        f_grid = np.asarray(estimate.eval(self.grid))
        gamma, _ = shadow_price(
            ModeParams(mode=self.mode, pacing_scale=self.pacing_scale, mu=self.mu)
        )
        branch = budget_branch_oracle(
            x,
            self.wls,
            self.grid,
            f_grid,
            plan.epsilon,
            plan.beta,
            gamma,
            self.learner.kappa,
            c.c_br,
        )
        flags: list[str] = []
        p_mix: float | None = None
        fallback = plan.rho > self.r0
        if fallback:
            planned = branch.info_bid
        else:
            greedy = first_argmax(branch.scores)
            index, p_mix, negative = squarecb_choose(
                branch.scores, greedy, branch.info_index, c.alpha, self.rng
            )
            if negative:
                flags.append("negative_gap")
            planned = float(branch.candidates[index])

        bid, crossed = safe_truncate(planned, estimate, plan.z)
        if crossed:
            flags.append("crossed_interval")
        if not estimate.inverse_attainable(1.0 - plan.z):
            flags.append("unattainable_inverse")
        return BidDecision(
            t=t,
            phase=Phase.MAIN,
            x=x,
            bid=float(bid),
            estimate=estimate,
            f_hat=float(estimate.eval(bid)),
            uplift_hat=plan.s,
            epsilon=plan.epsilon,
            rho=plan.rho,
            beta=plan.beta,
            z=plan.z,
            branch=branch.branch,
            fallback=fallback,
            fallback_reason="radius" if fallback else None,
            p_mix=p_mix,
            dual=self.mu,
            flags=flags,
        )

    def observe(self, decision: BidDecision, sample: RoundSample) -> Outcome:
        outcome, _, _ = self.learner.absorb(decision, sample)
        self.spend += outcome.payment
        if self.constrained:
            step = self.constants.eta * (outcome.payment - self.pace)
            self.mu = min(max(self.mu * math.exp(step), 0.0), 1.0)
        return outcome


def run_budget_episode(
    spec: EnvironmentSpec,
    constants: ResolvedConstants,
    rng: np.random.Generator,
    *,
    budget: float | None = None,
    env_seed: int | None = None,
    record_contexts: bool = False,
) -> list[RoundLog]:
    """Budget (or unconstrained, when budget is None) episode over the environment horizon."""
    if budget is not None and budget > spec.horizon:
        raise ValueError(f"budget {budget} exceeds horizon {spec.horizon}")
    agent = BudgetAgent(constants, rng, budget=budget)
    return run_episode(spec, agent, env_seed=env_seed, record_contexts=record_contexts)
