from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from ltebid.env.contexts import ContextKind
from ltebid.env.model import EnvironmentSpec, true_win_prob, uplift
from ltebid.types import Mode

logger = logging.getLogger(__name__)

BENCHMARK_GRID_SIZE = 2048
BISECTION_TOLERANCE = 1e-4
BISECTION_MAX_ITER = 60
_CHUNK = 512


@dataclass(frozen=True)
class PolicyValues:
    """Per-context reward, cost and margin of a greedy grid policy."""

    bids: np.ndarray
    reward: np.ndarray
    cost: np.ndarray
    margin: np.ndarray


@dataclass(frozen=True)
class BenchmarkPolicy:
    """Stationary comparator pi(x) = argmax_b F(b|x) (value_coef * theta'x - price_coef * b).

    Unc uses (1, 1), Bgt uses (1, 1 + gamma*) and RoS uses
    (1 + lambda*, 1 + lambda* (1 + rho_ros)), i.e. r + lambda* g.
    """

    spec: EnvironmentSpec
    mode: Mode
    grid: np.ndarray
    dual_scalar: float
    value_coef: float
    price_coef: float
    expected_reward_per_round: float
    expected_cost_per_round: float
    expected_margin_per_round: float
    reward_se: float
    cost_se: float
    margin_se: float
    feasible: bool = True

    def bid(self, x: np.ndarray) -> float:
        return float(self.evaluate(np.atleast_2d(x)).bids[0])

    def evaluate(self, contexts: np.ndarray) -> PolicyValues:
        return greedy_values(self.spec, contexts, self.grid, self.value_coef, self.price_coef)


def benchmark_grid(grid_size: int = BENCHMARK_GRID_SIZE) -> np.ndarray:
    if grid_size < 100:
        raise ValueError(f"benchmark grid_size must be >= 100, got {grid_size}")
    return np.linspace(0.0, 1.0, grid_size)


def greedy_values(
    spec: EnvironmentSpec,
    contexts: np.ndarray,
    grid: np.ndarray,
    value_coef: float,
    price_coef: float,
) -> PolicyValues:
    """Per-context grid argmax; argmax ties go to the smaller bid."""
    bids, reward, cost, margin = [], [], [], []
    for start in range(0, len(contexts), _CHUNK):
        chunk = contexts[start : start + _CHUNK]
        win = np.asarray(true_win_prob(spec, chunk, grid))
        effect = np.asarray(uplift(spec, chunk))[:, None]
        score = win * (value_coef * effect - price_coef * grid[None, :])
        index = np.argmax(score, axis=1)
        rows = np.arange(len(chunk))
        chosen = grid[index]
        chosen_win = win[rows, index]
        bids.append(chosen)
        reward.append(chosen_win * (effect[:, 0] - chosen))
        cost.append(chosen_win * chosen)
        margin.append(chosen_win * (effect[:, 0] - (1.0 + spec.ros_target) * chosen))
    if not bids:
        empty = np.zeros(0)
        return PolicyValues(empty, empty, empty, empty)
    return PolicyValues(*(np.concatenate(part) for part in (bids, reward, cost, margin)))


def _evaluation_contexts(spec: EnvironmentSpec, mc_samples: int, rng: np.random.Generator) -> np.ndarray:
    if spec.context_law.kind is ContextKind.FIXED_POOL:
        return spec.context_law.pool_array()
    return spec.context_law.sample_many(rng, mc_samples)


def _standard_error(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def _bisect(feasible: Callable[..., bool], lo: float, hi: float) -> float:
    """Shrink [lo, hi] keeping hi feasible; stop once hi is within tolerance of binding."""
    for _ in range(BISECTION_MAX_ITER):
        if feasible(hi, tight=True):
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def benchmark_policy(
    spec: EnvironmentSpec,
    mode: Mode,
    *,
    budget: float | None = None,
    grid_size: int = BENCHMARK_GRID_SIZE,
    mc_samples: int = 4000,
    rng: np.random.Generator | None = None,
) -> BenchmarkPolicy:
    """Brute-force stationary comparator for the given constraint regime.

    Bgt bisects gamma for the smallest multiplier whose Monte Carlo spend per round
    is at most B/T; RoS bisects lambda for the smallest multiplier with
    nonnegative expected margin.
    """
    grid = benchmark_grid(grid_size)
    generator = rng if rng is not None else np.random.default_rng(spec.seed)
    contexts = _evaluation_contexts(spec, mc_samples, generator)
    cache: dict[float, PolicyValues] = {}

    def values_at(dual: float) -> PolicyValues:
        if dual not in cache:
            if mode is Mode.ROS:
                cache[dual] = greedy_values(
                    spec, contexts, grid, 1.0 + dual, 1.0 + dual * (1.0 + spec.ros_target)
                )
            else:
                cache[dual] = greedy_values(spec, contexts, grid, 1.0, 1.0 + dual)
        return cache[dual]

    dual = 0.0
    value_coef, price_coef = 1.0, 1.0
    feasible = True

    if mode is Mode.BGT:
        if budget is None or not 1.0 <= budget <= spec.horizon:
            raise ValueError(f"budget must satisfy 1 <= B <= T={spec.horizon}, got {budget}")
        pace = budget / spec.horizon

        def spend_ok(gamma: float, tight: bool = False) -> bool:
            spend = float(np.mean(values_at(gamma).cost))
            if tight:
                return pace - BISECTION_TOLERANCE <= spend <= pace
            return spend <= pace

        if not spend_ok(0.0):
            hi = 1.0
            for _ in range(BISECTION_MAX_ITER):
                if spend_ok(hi):
                    break
                hi *= 2.0
            else:
                feasible = False
            dual = _bisect(spend_ok, 0.0, hi) if feasible else hi
        price_coef = 1.0 + dual

    elif mode is Mode.ROS:

        def margin_ok(lam: float, tight: bool = False) -> bool:
            margin = float(np.mean(values_at(lam).margin))
            if tight:
                return 0.0 <= margin <= BISECTION_TOLERANCE
            return margin >= 0.0

        if not margin_ok(0.0):
            hi = 1.0
            for _ in range(BISECTION_MAX_ITER):
                if margin_ok(hi):
                    break
                hi *= 2.0
            else:
                hi = np.inf
            if np.isinf(hi):
                # pure margin maximization is feasible since bidding 0 earns zero margin
                logger.warning("RoS benchmark multiplier diverged; using margin-maximizing policy")
                dual = np.inf
                value_coef, price_coef = 1.0, 1.0 + spec.ros_target
                cache[dual] = greedy_values(spec, contexts, grid, value_coef, price_coef)
            else:
                dual = _bisect(margin_ok, 0.0, hi)
        if np.isfinite(dual):
            value_coef, price_coef = 1.0 + dual, 1.0 + dual * (1.0 + spec.ros_target)

    chosen = values_at(dual)
    if mode is Mode.ROS:
        feasible = float(np.mean(chosen.margin)) >= -BISECTION_TOLERANCE
    pooled = spec.context_law.kind is ContextKind.FIXED_POOL
    return BenchmarkPolicy(
        spec=spec,
        mode=mode,
        grid=grid,
        dual_scalar=float(dual),
        value_coef=value_coef,
        price_coef=price_coef,
        expected_reward_per_round=float(np.mean(chosen.reward)),
        expected_cost_per_round=float(np.mean(chosen.cost)),
        expected_margin_per_round=float(np.mean(chosen.margin)),
        reward_se=0.0 if pooled else _standard_error(chosen.reward),
        cost_se=0.0 if pooled else _standard_error(chosen.cost),
        margin_se=0.0 if pooled else _standard_error(chosen.margin),
        feasible=feasible,
    )


def slater_margin(
    spec: EnvironmentSpec,
    grid_size: int = BENCHMARK_GRID_SIZE,
    mc_samples: int = 4000,
    rng: np.random.Generator | None = None,
) -> float:
    """delta_S = E_x max_b F(b|x) (theta'x - 2b), by per-context grid argmax."""
    if spec.ros_target != 1.0:
        raise ValueError(f"slater_margin is defined for ros_target = 1, got {spec.ros_target}")
    generator = rng if rng is not None else np.random.default_rng(spec.seed)
    contexts = _evaluation_contexts(spec, mc_samples, generator)
    values = greedy_values(spec, contexts, benchmark_grid(grid_size), 1.0, 2.0)
    return float(np.mean(values.margin))
