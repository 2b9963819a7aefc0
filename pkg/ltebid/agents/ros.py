from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ltebid.agents.core import (
    ModeParams,
    branch_scores,
    branch_ucbs,
    first_argmax,
    last_argmax,
    shadow_price,
    squarecb_choose,
)
from ltebid.agents.episode import BidDecision, Outcome, run_episode
from ltebid.agents.hull import LowerHull, SafeGrid, build_safe_grid, lower_hull
from ltebid.agents.learner import UpliftLearner
from ltebid.config import ResolvedConstants
from ltebid.env.model import EnvironmentSpec, RoundSample
from ltebid.learning.cdf import fit_phi
from ltebid.learning.uplift import WlsState, ipw_pseudo_outcome
from ltebid.types import Mode, Phase, RoundLog

logger = logging.getLogger(__name__)

_TOLERANCE = 1e-12


@dataclass
class BurnInData:
    """Rounds observed under uniform bidding, kept for the Slater estimate."""

    contexts: list[np.ndarray] = field(default_factory=list)
    competing_bids: list[float] = field(default_factory=list)
    bids: list[float] = field(default_factory=list)
    won: list[bool] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.competing_bids)

    def add(self, x: np.ndarray, m: float, bid: float, won: bool, value: float) -> None:
        self.contexts.append(np.asarray(x, dtype=float))
        self.competing_bids.append(float(m))
        self.bids.append(float(bid))
        self.won.append(bool(won))
        self.values.append(float(value))


def burn_in_propensity(grid: np.ndarray, competing_bids: np.ndarray) -> np.ndarray:
    """P(b >= m) for a bid drawn uniformly from ``grid``; ties count as wins."""
    ordered = np.sort(np.asarray(grid, dtype=float))
    bids = np.asarray(competing_bids, dtype=float)
    return 1.0 - np.searchsorted(ordered, bids, side="left") / len(ordered)


@dataclass(frozen=True)
class SlaterEstimate:
    delta_tilde: float
    radius: float
    delta_hat: float
    ceiling: float

    @property
    def exhausted(self) -> bool:
        return self.delta_hat <= 0.0


def dual_ceiling(delta_hat: float, c_r: float, lambda_max: float) -> float:
    """Lambda = 2 C_r / delta_hat, or the configured cap when delta_hat = 0."""
    if delta_hat > 0.0:
        return 2.0 * c_r / delta_hat
    return lambda_max


def estimate_slater(
    data: BurnInData,
    grid: np.ndarray,
    c_frak: float,
    grid_size: int,
    density_bound: float,
    burn_in: int,
    *,
    horizon: int,
    ridge: float = 1.0,
    c_r: float = 3.0,
    lambda_max: float = 100.0,
    ros_target: float = 1.0,
) -> SlaterEstimate:
    """Held-out max-over-grid margin estimate, shrunk by its radius.

    Nuisances (theta, phi and the residual CDF) come from the first half of the
    burn-in; the margin is evaluated on the second half's contexts. Burn-in bids
    are uniform on ``grid``, so the IPW pseudo-outcomes for theta use the exact
    propensity P(b >= m) given the observed competing bid. Rounds where that
    propensity is 0 or 1 carry no contrast and are left out of the theta fit.
    """
    if len(data) < 2:
        raise ValueError("burn-in needs at least two rounds to split")
    contexts = np.vstack(data.contexts)
    competing = np.asarray(data.competing_bids)
    half = len(data) // 2
    d = contexts.shape[1]

    fit_x, fit_m = contexts[:half], competing[:half]
    propensity = burn_in_propensity(grid, fit_m)
    informative = (propensity > 0.0) & (propensity < 1.0)
    pseudo = np.asarray(
        ipw_pseudo_outcome(
            propensity[informative],
            0.0,
            np.asarray(data.won[:half])[informative],
            np.asarray(data.values[:half])[informative],
        )
    )
    theta_x = fit_x[informative]
    gram = ridge * np.eye(d) + theta_x.T @ theta_x
    theta_tilde = linalg.solve(gram, theta_x.T @ pseudo, assume_a="pos")
    phi_tilde = fit_phi(fit_x, fit_m, ridge)
    residuals = np.sort(fit_m - fit_x @ phi_tilde)

    held_out = contexts[half:]
    shifted = grid[None, :] - (held_out @ phi_tilde)[:, None]
    win = np.searchsorted(residuals, shifted, side="right") / len(residuals)
    margin = win * ((held_out @ theta_tilde)[:, None] - (1.0 + ros_target) * grid[None, :])
    delta_tilde = float(np.mean(np.max(margin, axis=1)))

    radius = c_frak * (math.sqrt(d * math.log(horizon) / burn_in) + density_bound / grid_size)
    delta_hat = max(delta_tilde - radius, 0.0)
    ceiling = max(dual_ceiling(delta_hat, c_r, lambda_max), 1.0 / math.sqrt(horizon))
    if delta_hat <= 0.0:
        logger.warning(
            "Slater estimate %.4f does not clear its radius %.4f; dual ceiling set to %.1f",
            delta_tilde,
            radius,
            ceiling,
        )
    return SlaterEstimate(delta_tilde=delta_tilde, radius=radius, delta_hat=delta_hat, ceiling=ceiling)


@dataclass(frozen=True)
class RosFallback:
    index: int
    reason: str
    flagged: bool = False


@dataclass(frozen=True)
class RosMix:
    """SquareCB pool: hull candidates in the local interval plus the information bid."""

    indices: np.ndarray
    scores: np.ndarray
    branch: int
    greedy_position: int
    info_position: int


def ros_candidates(
    hull: LowerHull,
    safe: SafeGrid,
    ucb_0: np.ndarray,
    ucb_1: np.ndarray,
    score_0: np.ndarray,
    score_1: np.ndarray,
    kappa: float,
) -> RosFallback | RosMix:
    """Branch maximizers over hull vertices, the local q-interval, and the fallback rule.

    All arrays are indexed like ``safe``; returned indices point into it.
    """
    vertices = hull.indices
    if len(vertices) == 0:
        raise ValueError("hull must be nonempty")
    star_0 = int(vertices[last_argmax(ucb_0[vertices])])
    star_1 = int(vertices[first_argmax(ucb_1[vertices])])
    lo = min(safe.q_dagger[star_0], safe.q_dagger[star_1])
    hi = max(safe.q_dagger[star_0], safe.q_dagger[star_1])
    local = np.flatnonzero((safe.q_dagger >= lo - _TOLERANCE) & (safe.q_dagger <= hi + _TOLERANCE))
    if len(local) == 0:
        return RosFallback(index=-1, reason="empty_local_set", flagged=True)
    weights = safe.f_hat[local] * (1.0 - safe.f_hat[local])
    info = int(local[first_argmax(weights)])
    if hi - lo > kappa:
        return RosFallback(index=info, reason="interval")

    branch = int(safe.f_hat[star_1] > kappa)
    in_local = (safe.q_dagger[vertices] >= lo - _TOLERANCE) & (safe.q_dagger[vertices] <= hi + _TOLERANCE)
    candidates = vertices[in_local]
    pool = np.union1d(candidates, [info])
    scores = (score_1 if branch == 1 else score_0)[pool]
    candidate_scores = np.where(np.isin(pool, candidates), scores, -np.inf)
    return RosMix(
        indices=pool,
        scores=scores,
        branch=branch,
        greedy_position=first_argmax(candidate_scores),
        info_position=int(np.flatnonzero(pool == info)[0]),
    )


class RosAgent:
    """Return-on-spend agent: uniform burn-in, then safe-grid hull planning with a projected dual."""

    def __init__(
        self,
        constants: ResolvedConstants,
        rng: np.random.Generator,
        ros_target: float = 1.0,
    ) -> None:
        if ros_target != 1.0:
            logger.warning("ros_target=%s: guarantees only cover ros_target = 1", ros_target)
        self.constants = constants
        self.rng = rng
        self.ros_target = ros_target
        self.learner = UpliftLearner(constants, rng)
        self.burn_in = math.ceil(math.sqrt(constants.horizon))
        self.lam = constants.dual_floor
        self.ceiling: float | None = None
        self.slater: SlaterEstimate | None = None
        self.burn_in_data = BurnInData()
        self.g_opt_sq_sum = 0.0
        self.grid = constants.grid

    @property
    def wls(self) -> WlsState:
        return self.learner.wls

    def dual_potential(self) -> float | None:
        """L_Lambda = log(Lambda) / eta once the ceiling is frozen."""
        if self.ceiling is None:
            return None
        return math.log(self.ceiling) / self.constants.eta

    def freeze_ceiling(self) -> None:
        c = self.constants
        self.slater = estimate_slater(
            self.burn_in_data,
            self.grid,
            c.c_frak,
            c.grid_size,
            c.density_bound,
            self.burn_in,
            horizon=c.horizon,
            ridge=c.slater_ridge,
            c_r=c.c_r,
            lambda_max=c.lambda_max,
            ros_target=self.ros_target,
        )
        self.ceiling = self.slater.ceiling

    def step(self, x: np.ndarray) -> BidDecision:
        c = self.constants
        plan = self.learner.plan(x)
        estimate = plan.estimate
        common = {
            "t": plan.t,
            "x": x,
            "estimate": estimate,
            "uplift_hat": plan.s,
            "epsilon": plan.epsilon,
            "rho": plan.rho,
            "beta": plan.beta,
            "z": plan.z,
        }
        if plan.t <= self.burn_in:
            bid = float(self.grid[self.rng.integers(len(self.grid))])
            return BidDecision(phase=Phase.BURN_IN, bid=bid, f_hat=float(estimate.eval(bid)), **common)

        if self.ceiling is None:
            self.freeze_ceiling()
        flags: list[str] = []
        if self.slater is not None and self.slater.exhausted:
            flags.append("slater_exhausted")
        safe, empty = build_safe_grid(estimate, plan.z, c.grid_size)
        if empty:
            flags.append("empty_safe_grid")

        gamma, a = shadow_price(
            ModeParams(mode=Mode.ROS, lam=self.lam, ceiling=self.ceiling, ros_target=self.ros_target)
        )
        score_0, score_1 = branch_scores(safe.f_hat, plan.s, a, safe.bids)
        ucb_0, ucb_1 = branch_ucbs(score_0, score_1, safe.f_hat, plan.rho, plan.epsilon, c.c_ros)
        hull = lower_hull(safe.q_dagger, safe.c_dagger)
        choice = ros_candidates(hull, safe, ucb_0, ucb_1, score_0, score_1, self.learner.kappa)

        p_mix: float | None = None
        branch: int | None = None
        if isinstance(choice, RosFallback):
            if choice.flagged:
                flags.append(choice.reason)
                bid = estimate.generalized_inverse(0.5)
            else:
                bid = float(safe.bids[choice.index])
            fallback, reason = True, choice.reason
        else:
            position, p_mix, negative = squarecb_choose(
                choice.scores, choice.greedy_position, choice.info_position, c.alpha, self.rng
            )
            if negative:
                flags.append("negative_gap")
            bid = float(safe.bids[choice.indices[position]])
            branch, fallback, reason = choice.branch, False, None

        f_hat = float(estimate.eval(bid))
        if not plan.z - _TOLERANCE <= f_hat <= 1.0 - plan.z + estimate.jump + _TOLERANCE:
            flags.append("unsafe_bid")
        if c.density_bound / c.grid_size + 4.0 * plan.epsilon > self.learner.kappa / 8.0:
            flags.append("mesh")
        if plan.epsilon > self.learner.kappa / 2.0:
            flags.append("cdf_radius")
        return BidDecision(
            phase=Phase.PHASE2,
            bid=bid,
            f_hat=f_hat,
            branch=branch,
            fallback=fallback,
            fallback_reason=reason,
            p_mix=p_mix,
            dual=self.lam,
            dual_ceiling=self.ceiling,
            hull_size=len(hull),
            flags=flags,
            **common,
        )

    def observe(self, decision: BidDecision, sample: RoundSample) -> Outcome:
        outcome, _, _ = self.learner.absorb(decision, sample)
        if decision.phase is Phase.BURN_IN:
            value = sample.observed_value(outcome.won)
            self.burn_in_data.add(sample.x, sample.m, decision.bid, outcome.won, value)
            return outcome

        q = float(decision.f_hat)
        margin = q * (float(decision.uplift_hat) - (1.0 + self.ros_target) * decision.bid)
        g_opt = margin + q * float(decision.rho)
        self.g_opt_sq_sum += g_opt**2
        updated = self.lam * math.exp(-self.constants.eta * g_opt)
        self.lam = min(max(updated, self.constants.dual_floor), float(self.ceiling))
        return Outcome(won=outcome.won, payment=outcome.payment, g_opt=g_opt)


def run_ros_episode(
    spec: EnvironmentSpec,
    constants: ResolvedConstants,
    rng: np.random.Generator,
    *,
    env_seed: int | None = None,
    record_contexts: bool = False,
) -> list[RoundLog]:
    """RoS episode: T rounds, no stopping."""
    agent = RosAgent(constants, rng, ros_target=spec.ros_target)
    return run_episode(spec, agent, env_seed=env_seed, record_contexts=record_contexts)
