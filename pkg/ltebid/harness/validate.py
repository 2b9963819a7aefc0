"""Monte Carlo checks of the high-probability events the agents rely on.

Each check returns a ``ValidationCheck`` with a pass rate (or error statistic)
and the target it is compared against; ``validate`` bundles them into a report.
"""

from __future__ import annotations

import logging

import numpy as np

from ltebid.agents.budget import BudgetAgent
from ltebid.agents.episode import run_episode
from ltebid.agents.ros import RosAgent
from ltebid.env.benchmark import slater_margin
from ltebid.env.model import EnvironmentSpec, sample_outcomes, sample_round, true_win_prob, uplift
from ltebid.harness.config import SimulationConfig
from ltebid.harness.runner import coverage_rate
from ltebid.harness.schemas import ValidationCheck, ValidationReport
from ltebid.learning.cdf import (
    AuctionHistory,
    estimate_cdf,
    random_split,
    ridge_floor,
    spectral_split_check,
)
from ltebid.learning.uplift import ipw_pseudo_outcome
from ltebid.types import Mode
from ltebid.utils import derive_seed, round_rng

logger = logging.getLogger(__name__)

_TOLERANCE = 1e-12


def check_spectral(
    spec: EnvironmentSpec, *, trials: int, rounds: int, target: float, seed: int
) -> ValidationCheck:
    """Pass rate of ridge*I + sum_S x x' >= Sigma_t / 4 over fresh random splits."""
    d = spec.dimension
    ridge = ridge_floor(d, rounds)
    passes = 0
    for trial in range(trials):
        rng = np.random.default_rng(derive_seed(seed, "spectral", trial))
        history = AuctionHistory(d, ridge, capacity=rounds)
        history.extend(spec.context_law.sample_many(rng, rounds), np.zeros(rounds))
        train, _ = random_split(rounds, rng)
        passes += spectral_split_check(history, train, ridge)
    rate = passes / trials
    return ValidationCheck(
        name="spectral_split",
        passed=rate >= target,
        statistic=rate,
        target=target,
        trials=trials,
        details={
            "ridge": ridge,
            "rounds": float(rounds),
            "kappa_x": spec.context_law.min_eigenvalue(np.random.default_rng(derive_seed(seed, "kappa"))),
        },
    )


def check_cdf_oracle(config: SimulationConfig) -> ValidationCheck:
    """Fraction of (round, bid) pairs breaking |F_hat - F| <= eps sqrt(F(1-F)) + eps^2.

    Pairs with F(1 - F) = 0 are counted as satisfied and reported separately.
    """
    settings = config.validation
    spec = config.environment_spec().model_copy(update={"horizon": settings.cdf_horizon})
    constants = config.agent.resolve(spec.dimension, spec.horizon, spec.noise)
    bids = np.linspace(0.0, 1.0, settings.cdf_bid_points)
    checked = violations = trivial = 0
    for replication in range(settings.cdf_replications):
        env_seed = derive_seed(config.seed, "cdf", "env", replication)
        rng = np.random.default_rng(derive_seed(config.seed, "cdf", "split", replication))
        history = AuctionHistory(spec.dimension, constants.ridge, capacity=spec.horizon)
        for t in range(1, spec.horizon + 1):
            sample = sample_round(spec, round_rng(env_seed, t))
            offset = t - settings.cdf_min_round
            if offset >= 0 and offset % settings.cdf_round_stride == 0:
                estimate = estimate_cdf(
                    history,
                    sample.x,
                    constants.ridge,
                    spec.horizon,
                    constants.c_eps,
                    rng,
                    min_ridge=constants.min_ridge,
                )
                truth = np.asarray(true_win_prob(spec, sample.x, bids))
                spread = truth * (1.0 - truth)
                eps = estimate.epsilon
                error = np.abs(np.asarray(estimate.eval(bids)) - truth)
                degenerate = spread <= _TOLERANCE
                broken = (error > eps * np.sqrt(spread) + eps**2 + _TOLERANCE) & ~degenerate
                checked += len(bids)
                violations += int(np.sum(broken))
                trivial += int(np.sum(degenerate))
            history.append(sample.x, sample.m)
    rate = violations / checked if checked else 0.0
    return ValidationCheck(
        name="cdf_oracle",
        passed=rate <= settings.cdf_max_violation,
        statistic=rate,
        target=settings.cdf_max_violation,
        trials=checked,
        details={"trivially_satisfied": float(trivial), "violations": float(violations)},
    )


def check_wls_coverage(config: SimulationConfig) -> ValidationCheck:
    """Average post-warm-start share of rounds with |(theta_hat - theta)'x| <= rho."""
    settings = config.validation
    spec = config.environment_spec()
    constants = config.agent.resolve(spec.dimension, spec.horizon, spec.noise)
    rates: list[float] = []
    for replication in range(settings.coverage_replications):
        rng = np.random.default_rng(derive_seed(config.seed, "coverage", "agent", replication))
        agent = BudgetAgent(constants, rng)
        env_seed = derive_seed(config.seed, "coverage", "env", replication)
        logs = run_episode(spec, agent, env_seed=env_seed)
        rate = coverage_rate(logs)
        if rate is not None:
            rates.append(rate)
    mean = float(np.mean(rates)) if rates else 1.0
    return ValidationCheck(
        name="wls_coverage",
        passed=mean >= settings.coverage_target,
        statistic=mean,
        target=settings.coverage_target,
        trials=len(rates),
        details={"min_rate": float(min(rates, default=1.0))},
    )


def check_ipw_mean(config: SimulationConfig) -> ValidationCheck:
    """Mean IPW pseudo-outcome at the true propensity against theta'x, in standard errors."""
    settings = config.validation
    spec = config.environment_spec()
    rng = np.random.default_rng(derive_seed(config.seed, "ipw"))
    x = spec.context_law.sample(rng)
    bid = float(np.clip(x @ spec.phi, 0.0, 1.0))
    propensity = float(true_win_prob(spec, x, bid))
    effect = float(uplift(spec, x))
    target = settings.ipw_max_z
    if propensity * (1.0 - propensity) <= _TOLERANCE:
        return ValidationCheck(
            name="ipw_mean",
            passed=True,
            statistic=0.0,
            target=target,
            trials=0,
            details={"propensity": propensity, "uplift": effect},
        )
    m, v1, v0 = sample_outcomes(spec, x, rng, settings.ipw_draws)
    won = bid >= m
    pseudo = np.asarray(ipw_pseudo_outcome(propensity, 0.0, won, np.where(won, v1, v0)))
    mean = float(np.mean(pseudo))
    se = float(np.std(pseudo, ddof=1) / np.sqrt(len(pseudo)))
    z = abs(mean - effect) / se if se > 0 else 0.0
    return ValidationCheck(
        name="ipw_mean",
        passed=z <= target,
        statistic=z,
        target=target,
        trials=settings.ipw_draws,
        details={"propensity": propensity, "uplift": effect, "mean": mean, "se": se},
    )


def check_noise(spec: EnvironmentSpec) -> list[ValidationCheck]:
    bound = spec.noise.bound
    details = {
        "scale": spec.noise.scale,
        "density_floor": spec.noise.density_floor,
        "sub_gaussian_proxy": spec.noise.sub_gaussian_proxy,
    }
    if np.isfinite(bound):
        details["density_bound"] = float(bound)
    density_ok = spec.noise.check_density_bound()
    concave_ok = spec.noise.check_log_concave()
    return [
        ValidationCheck(
            name="noise_density_bound",
            passed=density_ok,
            statistic=float(density_ok),
            target=1.0,
            trials=1,
            details=details,
        ),
        ValidationCheck(
            name="noise_log_concave",
            passed=concave_ok,
            statistic=float(concave_ok),
            target=1.0,
            trials=1,
            details=details,
        ),
    ]


def check_slater_estimate(config: SimulationConfig) -> ValidationCheck:
    """Share of seeds whose burn-in estimate delta_hat lands in [delta_S / 2, 3 delta_S / 2]."""
    settings = config.validation
    spec = config.environment_spec().model_copy(update={"horizon": settings.slater_horizon})
    constants = config.agent.resolve(spec.dimension, spec.horizon, spec.noise)
    delta_s = slater_margin(spec, rng=np.random.default_rng(derive_seed(config.seed, "slater")))
    hits = 0
    estimates: list[float] = []
    for replication in range(settings.slater_replications):
        rng = np.random.default_rng(derive_seed(config.seed, "slater", "agent", replication))
        env_seed = derive_seed(config.seed, "slater", "env", replication)
        agent = RosAgent(constants, rng, ros_target=spec.ros_target)
        for t in range(1, agent.burn_in + 1):
            sample = sample_round(spec, round_rng(env_seed, t))
            agent.observe(agent.step(sample.x), sample)
        agent.freeze_ceiling()
        delta_hat = agent.slater.delta_hat if agent.slater is not None else 0.0
        estimates.append(delta_hat)
        hits += 0.5 * delta_s <= delta_hat <= 1.5 * delta_s
    rate = hits / settings.slater_replications
    return ValidationCheck(
        name="slater_estimate",
        passed=rate >= settings.slater_target,
        statistic=rate,
        target=settings.slater_target,
        trials=settings.slater_replications,
        details={"delta_s": delta_s, "mean_delta_hat": float(np.mean(estimates))},
    )


def validate(config: SimulationConfig) -> ValidationReport:
    settings = config.validation
    spec = config.environment_spec()
    checks = [
        check_spectral(
            spec,
            trials=settings.spectral_trials,
            rounds=settings.spectral_rounds,
            target=settings.spectral_target,
            seed=config.seed,
        ),
        check_cdf_oracle(config),
        check_wls_coverage(config),
        check_ipw_mean(config),
        *check_noise(spec),
    ]
    if config.mode is Mode.ROS and spec.ros_target == 1.0:
        checks.append(check_slater_estimate(config))
    for check in checks:
        status = "pass" if check.passed else "FAIL"
        logger.info("%s: %s (%.4f vs %.4f)", check.name, status, check.statistic, check.target)
    return ValidationReport(environment=config.environment_name, seed=config.seed, checks=checks)
