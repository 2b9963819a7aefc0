from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from ltebid.agents.episode import BidDecision
from ltebid.agents.hull import SafeGrid, build_safe_grid, lower_hull
from ltebid.agents.ros import (
    BurnInData,
    RosAgent,
    RosFallback,
    RosMix,
    burn_in_propensity,
    dual_ceiling,
    estimate_slater,
    ros_candidates,
    run_ros_episode,
)
from ltebid.config import AgentConstants
from ltebid.env import build_preset, sample_round
from ltebid.env.benchmark import slater_margin
from ltebid.env.model import RoundSample
from ltebid.harness.config import SimulationConfig
from ltebid.harness.validate import check_slater_estimate
from ltebid.learning.cdf import SplitCdfEstimate
from ltebid.types import Phase
from ltebid.utils import round_rng

HORIZON = 400


def test_dual_ceiling_uses_the_cap_without_a_slater_margin() -> None:
    assert dual_ceiling(0.0, 3.0, 100.0) == 100.0
    assert dual_ceiling(0.2, 3.0, 100.0) == pytest.approx(30.0)


def _burn_in(rounds: int, horizon: int = 10_000, env_seed: int = 21) -> tuple[BurnInData, np.ndarray]:
    spec = build_preset("generous_slater", horizon=horizon)
    grid = np.linspace(0.0, 1.0, math.ceil(math.sqrt(horizon)) + 1)
    rng = np.random.default_rng(env_seed)
    data = BurnInData()
    for t in range(1, rounds + 1):
        sample = sample_round(spec, round_rng(env_seed, t))
        bid = float(grid[rng.integers(len(grid))])
        won = bid >= sample.m
        data.add(sample.x, sample.m, bid, won, sample.observed_value(won))
    return data, grid


def test_burn_in_propensity_counts_grid_bids_at_or_above_the_competing_bid() -> None:
    grid = np.linspace(0.0, 1.0, 5)
    propensity = burn_in_propensity(grid, np.array([-0.1, 0.0, 0.25, 0.3, 1.0, 1.2]))
    assert propensity.tolist() == pytest.approx([1.0, 1.0, 0.8, 0.6, 0.2, 0.0])


def test_slater_estimate_shrinks_by_its_radius() -> None:
    data, grid = _burn_in(100)
    estimate = estimate_slater(data, grid, 0.5, 100, 4.0, 100, horizon=10_000)
    expected_radius = 0.5 * (math.sqrt(2 * math.log(10_000) / 100) + 4.0 / 100)
    assert estimate.radius == pytest.approx(expected_radius)
    assert estimate.delta_hat == pytest.approx(max(estimate.delta_tilde - expected_radius, 0.0))
    assert estimate.ceiling >= 1.0 / math.sqrt(10_000)
    if estimate.exhausted:
        assert estimate.ceiling == 100.0
    else:
        assert estimate.ceiling == pytest.approx(6.0 / estimate.delta_hat)


@pytest.mark.parametrize("env_seed", [21, 22, 23])
def test_slater_estimate_lands_near_the_true_margin(env_seed: int) -> None:
    spec = build_preset("generous_slater", horizon=10_000)
    constants = AgentConstants().resolve(spec.dimension, spec.horizon, spec.noise)
    delta_s = slater_margin(spec, grid_size=1024)
    data, grid = _burn_in(100, env_seed=env_seed)
    estimate = estimate_slater(
        data,
        grid,
        constants.c_frak,
        constants.grid_size,
        constants.density_bound,
        100,
        horizon=10_000,
        ridge=constants.slater_ridge,
    )
    assert estimate.radius < delta_s / 2.0
    assert 0.5 * delta_s <= estimate.delta_hat <= 1.5 * delta_s


def test_slater_estimate_needs_two_rounds() -> None:
    data, _ = _burn_in(1)
    with pytest.raises(ValueError):
        estimate_slater(data, np.linspace(0.0, 1.0, 5), 0.5, 4, 1.0, 1, horizon=100)


@pytest.mark.slow
def test_shipped_slater_preset_passes_the_estimate_check() -> None:
    check = check_slater_estimate(
        SimulationConfig(mode="ros", environment="generous_slater", seed=0)
    )
    assert check.trials == 50
    assert check.passed, check.details


def _candidates(kappa: float) -> RosFallback | RosMix:
    est = SplitCdfEstimate(
        phi_hat=np.zeros(1),
        eval_points=np.linspace(0.0, 1.0, 41),
        epsilon=0.01,
        warm_start=False,
        t=42,
    )
    safe, _ = build_safe_grid(est, 0.05, 40)
    hull = lower_hull(safe.q_dagger, safe.c_dagger)
    score_0 = safe.f_hat * (0.6 - 1.5 * safe.bids)
    score_1 = score_0 - 0.6
    return ros_candidates(hull, safe, score_0, score_1, score_0, score_1, kappa)


def test_ros_candidates_mix_over_hull_vertices() -> None:
    choice = _candidates(kappa=1.0)
    assert isinstance(choice, RosMix)
    assert choice.info_position < len(choice.indices)
    assert choice.greedy_position < len(choice.indices)
    assert len(choice.scores) == len(choice.indices)


def _convex_safe_grid(f_hat: np.ndarray) -> SafeGrid:
    bids = np.linspace(0.1, 0.9, len(f_hat))
    return SafeGrid(bids=bids, f_hat=f_hat, q_dagger=f_hat.copy(), c_dagger=bids * f_hat)


def test_ros_candidates_fall_back_on_a_wide_interval() -> None:
    safe = _convex_safe_grid(np.linspace(0.1, 0.9, 9))
    hull = lower_hull(safe.q_dagger, safe.c_dagger)
    assert len(hull) == 9
    # the control maximizer sits at q = 0.1 and the treated one at q = 0.9
    ucb_0, ucb_1 = -safe.bids, safe.bids.copy()

    choice = ros_candidates(hull, safe, ucb_0, ucb_1, ucb_0, ucb_1, kappa=0.5)
    assert isinstance(choice, RosFallback)
    assert choice.reason == "interval"
    assert not choice.flagged
    assert choice.index == 4
    assert safe.bids[choice.index] == pytest.approx(0.5)

    assert isinstance(ros_candidates(hull, safe, ucb_0, ucb_1, ucb_0, ucb_1, kappa=0.9), RosMix)


def test_interval_fallback_bid_maximizes_the_information_weight() -> None:
    rng = np.random.default_rng(31)
    fallbacks = 0
    for _ in range(200):
        safe = _convex_safe_grid(np.sort(rng.uniform(0.0, 1.0, 15)))
        hull = lower_hull(safe.q_dagger, safe.c_dagger)
        ucb_0, ucb_1 = rng.normal(size=15), rng.normal(size=15)
        choice = ros_candidates(hull, safe, ucb_0, ucb_1, ucb_0, ucb_1, kappa=0.2)
        if not isinstance(choice, RosFallback):
            continue
        fallbacks += 1
        vertices = hull.indices
        q_0 = safe.q_dagger[vertices[np.flatnonzero(ucb_0[vertices] == ucb_0[vertices].max())[-1]]]
        q_1 = safe.q_dagger[vertices[np.flatnonzero(ucb_1[vertices] == ucb_1[vertices].max())[0]]]
        assert abs(q_1 - q_0) > 0.2
        local = (safe.q_dagger >= min(q_0, q_1)) & (safe.q_dagger <= max(q_0, q_1))
        omega = safe.f_hat * (1.0 - safe.f_hat)
        assert local[choice.index]
        assert omega[choice.index] == pytest.approx(float(np.max(omega[local])))
    assert fallbacks > 0


def test_burn_in_bids_are_uniform_on_the_grid() -> None:
    spec = build_preset("generous_slater", horizon=HORIZON)
    constants = AgentConstants().resolve(spec.dimension, spec.horizon, spec.noise)
    agent = RosAgent(constants, np.random.default_rng(13))
    x = spec.context_law.sample(np.random.default_rng(0))
    draws = 100 * len(agent.grid)
    counts = np.zeros(len(agent.grid), dtype=int)
    for _ in range(draws):
        decision = agent.step(x)
        assert decision.phase is Phase.BURN_IN
        counts[int(np.flatnonzero(np.isclose(agent.grid, decision.bid))[0])] += 1
    assert stats.chisquare(counts).pvalue > 1e-3


def test_dual_update_is_multiplicative_in_the_optimistic_margin() -> None:
    spec = build_preset("generous_slater", horizon=HORIZON)
    constants = AgentConstants(eta=0.01).resolve(spec.dimension, spec.horizon, spec.noise)
    agent = RosAgent(constants, np.random.default_rng(2))
    agent.ceiling = 100.0
    x = spec.context_law.sample(np.random.default_rng(0))
    sample = RoundSample(x=x, m=0.9, v1=1.0, v0=0.0)

    def decision(t: int) -> BidDecision:
        # g_opt = 0.5 * (0 - 2 * 0.5) + 0.5 * 0 = -0.5
        return BidDecision(
            t=t, phase=Phase.PHASE2, x=x, bid=0.5, f_hat=0.5, uplift_hat=0.0, epsilon=0.1, rho=0.0
        )

    agent.lam = 1.0
    outcome = agent.observe(decision(HORIZON), sample)
    assert outcome.g_opt == pytest.approx(-0.5)
    assert agent.lam == pytest.approx(math.exp(0.005))

    agent.lam = 99.9
    agent.observe(decision(HORIZON), sample)
    assert agent.lam == 100.0


def test_ros_episode_respects_dual_and_safety_contracts() -> None:
    spec = build_preset("generous_slater", horizon=HORIZON)
    constants = AgentConstants().resolve(spec.dimension, spec.horizon, spec.noise)
    logs = run_ros_episode(spec, constants, np.random.default_rng(4), env_seed=17)
    assert len(logs) == HORIZON

    burn_in = math.ceil(math.sqrt(HORIZON))
    assert [log.phase for log in logs[:burn_in]] == [Phase.BURN_IN] * burn_in
    phase2 = logs[burn_in:]
    assert all(log.phase is Phase.PHASE2 for log in phase2)

    floor = 1.0 / math.sqrt(HORIZON)
    for log in phase2:
        assert log.dual_ceiling is not None
        assert floor - 1e-12 <= log.dual <= log.dual_ceiling + 1e-12
        assert not log.has_flag("unsafe_bid")
        assert log.g_opt is not None
        assert log.hull_size is not None and log.hull_size >= 1
    assert len({log.dual_ceiling for log in phase2}) == 1


def test_ros_agent_tracks_dual_diagnostics() -> None:
    spec = build_preset("generous_slater", horizon=HORIZON)
    constants = AgentConstants().resolve(spec.dimension, spec.horizon, spec.noise)
    agent = RosAgent(constants, np.random.default_rng(1))
    assert agent.dual_potential() is None
    for t in range(1, HORIZON + 1):
        sample = sample_round(spec, round_rng(3, t))
        agent.observe(agent.step(sample.x), sample)
    assert agent.slater is not None
    assert agent.ceiling == agent.slater.ceiling
    assert agent.dual_potential() == pytest.approx(math.log(agent.ceiling) / constants.eta)
    assert agent.g_opt_sq_sum > 0.0
    assert agent.lam >= constants.dual_floor
