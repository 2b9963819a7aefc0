from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ltebid.agents.core import kappa_br, z_threshold
from ltebid.agents.episode import BidDecision, Outcome, settle
from ltebid.config import ResolvedConstants
from ltebid.env.model import RoundSample
from ltebid.learning.cdf import AuctionHistory, SplitCdfEstimate, estimate_cdf
from ltebid.learning.uplift import (
    WlsState,
    beta_schedule,
    confidence_radius,
    ipw_pseudo_outcome,
    variance_weight,
    wls_update,
)


@dataclass(frozen=True)
class RoundPlan:
    """Per-round estimates shared by every mode."""

    t: int
    estimate: SplitCdfEstimate
    theta_hat: np.ndarray
    s: float
    beta: float
    rho: float
    z: float

    @property
    def epsilon(self) -> float:
        return self.estimate.epsilon


class UpliftLearner:
    """CDF history plus IPW-WLS state, the learning core of both agents."""

    def __init__(self, constants: ResolvedConstants, rng: np.random.Generator) -> None:
        self.constants = constants
        self.rng = rng
        self.history = AuctionHistory(constants.dimension, constants.ridge)
        self.wls = WlsState.create(constants.dimension, constants.ridge, constants.horizon)
        self.kappa = kappa_br(constants.density_bound)

    @property
    def rounds(self) -> int:
        return len(self.history)

    def plan(self, x: np.ndarray) -> RoundPlan:
        c = self.constants
        estimate = estimate_cdf(
            self.history, x, c.ridge, c.horizon, c.c_eps, self.rng, min_ridge=c.min_ridge
        )
        theta_hat = self.wls.theta_hat()
        beta = beta_schedule(self.wls, c.c_beta)
        return RoundPlan(
            t=self.rounds + 1,
            estimate=estimate,
            theta_hat=theta_hat,
            s=float(x @ theta_hat),
            beta=beta,
            rho=confidence_radius(self.wls, x, beta),
            z=z_threshold(beta, c.dimension, c.horizon, estimate.epsilon),
        )

    def absorb(self, decision: BidDecision, sample: RoundSample) -> tuple[Outcome, float, float]:
        """Settle the auction, update WLS with the observed side and append (x, m).

        Returns the outcome with the weight and pseudo-outcome fed to WLS.
        """
        outcome = settle(decision.bid, sample)
        f_hat = float(decision.f_hat)
        epsilon = float(decision.epsilon)
        weight = float(variance_weight(f_hat))
        pseudo = float(
            ipw_pseudo_outcome(f_hat, epsilon, outcome.won, sample.observed_value(outcome.won))
        )
        wls_update(self.wls, sample.x, weight, pseudo, epsilon)
        self.history.append(sample.x, sample.m)
        return outcome, weight, pseudo
