from __future__ import annotations

import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ltebid.agents.baselines import BenchmarkBidder, UniformBidder
from ltebid.agents.budget import BudgetAgent
from ltebid.agents.episode import Bidder, run_episode
from ltebid.agents.ros import RosAgent
from ltebid.env.benchmark import BenchmarkPolicy, benchmark_policy
from ltebid.env.model import EnvironmentSpec, context_at
from ltebid.harness.config import SimulationConfig
from ltebid.harness.schemas import RunSummary, SummaryMetrics
from ltebid.types import AgentKind, Mode, RoundLog
from ltebid.utils import derive_seed, monotonic_ms

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReplicationResult:
    index: int
    logs: list[RoundLog]
    metrics: SummaryMetrics


@dataclass(frozen=True)
class RunResult:
    config: SimulationConfig
    policy: BenchmarkPolicy
    logs: list[list[RoundLog]]
    summary: RunSummary


def compute_benchmark(config: SimulationConfig) -> BenchmarkPolicy:
    spec = config.environment_spec()
    return benchmark_policy(
        spec,
        config.mode,
        budget=config.resolved_budget(spec.horizon),
        grid_size=config.benchmark_grid,
        mc_samples=config.benchmark_samples,
        rng=np.random.default_rng(derive_seed(config.seed, "benchmark")),
    )


def build_bidder(
    config: SimulationConfig,
    spec: EnvironmentSpec,
    policy: BenchmarkPolicy,
    rng: np.random.Generator,
) -> Bidder:
    constants = config.agent.resolve(spec.dimension, spec.horizon, spec.noise)
    budget = config.resolved_budget(spec.horizon)
    if config.agent_kind is AgentKind.UNIFORM:
        return UniformBidder(constants.grid, rng, budget=budget)
    if config.agent_kind is AgentKind.BENCHMARK:
        return BenchmarkBidder(policy, budget=budget)
    if config.mode is Mode.ROS:
        return RosAgent(constants, rng, ros_target=spec.ros_target)
    return BudgetAgent(constants, rng, budget=budget)


def paired_benchmark_value(spec: EnvironmentSpec, policy: BenchmarkPolicy, env_seed: int) -> float:
    """Benchmark expected reward summed over the replication's own T contexts."""
    contexts = np.vstack([context_at(spec, env_seed, t) for t in range(1, spec.horizon + 1)])
    return float(np.sum(policy.evaluate(contexts).reward))


def coverage_rate(logs: list[RoundLog]) -> float | None:
    covered = [
        abs(log.uplift_hat - log.uplift_true) <= log.rho
        for log in logs
        if log.eval_size > 0 and log.uplift_hat is not None and log.rho is not None
    ]
    if not covered:
        return None
    return float(np.mean(covered))


def summarize_replication(
    index: int,
    logs: list[RoundLog],
    *,
    mode: Mode,
    horizon: int,
    benchmark_value: float,
    budget: float | None,
    agent: Bidder | None = None,
) -> SummaryMetrics:
    cumulative = math.fsum(log.expected_reward for log in logs)
    realized = math.fsum(log.realized_reward for log in logs)
    margin_sum = math.fsum(log.expected_margin for log in logs)
    flags = Counter(flag for log in logs for flag in log.flags.split("|") if flag)
    metrics: dict[str, object] = {}
    if isinstance(agent, (BudgetAgent, RosAgent)):
        metrics.update(
            delta_1=agent.wls.delta_1,
            delta_2=agent.wls.delta_2,
            delta_2_bar=agent.wls.delta_2_bar,
        )
    if isinstance(agent, RosAgent):
        metrics.update(
            delta_hat=agent.slater.delta_hat if agent.slater is not None else None,
            dual_ceiling=agent.ceiling,
            dual_potential=agent.dual_potential(),
            g_opt_sq_sum=agent.g_opt_sq_sum,
        )
    return SummaryMetrics(
        replication=index,
        rounds=len(logs),
        stopped_at=len(logs) + 1 if len(logs) < horizon else None,
        cumulative_reward=cumulative,
        realized_reward=realized,
        benchmark_value=benchmark_value,
        regret=benchmark_value - cumulative,
        realized_regret=benchmark_value - realized,
        spend=math.fsum(log.payment for log in logs),
        budget=budget,
        margin_sum=margin_sum,
        violation=max(-margin_sum, 0.0) if mode is Mode.ROS else None,
        coverage_rate=coverage_rate(logs),
        fallback_count=sum(log.fallback for log in logs),
        mesh_violation_count=flags.get("mesh", 0),
        flag_counts=dict(sorted(flags.items())),
        **metrics,
    )


def run_replication(config: SimulationConfig, index: int, policy: BenchmarkPolicy) -> ReplicationResult:
    """One episode with its own environment and agent streams; safe to run in a worker process."""
    spec = config.environment_spec()
    env_seed = derive_seed(config.seed, "env", index)
    rng = np.random.default_rng(derive_seed(config.seed, "agent", index))
    agent = build_bidder(config, spec, policy, rng)
    logs = run_episode(spec, agent, env_seed=env_seed, record_contexts=config.record_contexts)
    metrics = summarize_replication(
        index,
        logs,
        mode=config.mode,
        horizon=spec.horizon,
        benchmark_value=paired_benchmark_value(spec, policy, env_seed),
        budget=config.resolved_budget(spec.horizon),
        agent=agent,
    )
    logger.info(
        "replication %d: %d rounds, regret %.3f, spend %.3f",
        index,
        metrics.rounds,
        metrics.regret,
        metrics.spend,
    )
    return ReplicationResult(index=index, logs=logs, metrics=metrics)


def _mean(values: list[float]) -> float:
    return float(np.mean(values)) if values else 0.0


def _se(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def aggregate(
    config: SimulationConfig, policy: BenchmarkPolicy, metrics: list[SummaryMetrics]
) -> RunSummary:
    spec = config.environment_spec()
    regrets = [item.regret for item in metrics]
    spends = [item.spend for item in metrics]
    coverage = [item.coverage_rate for item in metrics if item.coverage_rate is not None]
    violation: dict[str, float | None] = {}
    if config.mode is Mode.ROS:
        violations = [float(item.violation or 0.0) for item in metrics]
        violation = {
            "mean_violation": _mean(violations),
            "se_violation": _se(violations),
            "mean_shortfall": max(-_mean([item.margin_sum for item in metrics]), 0.0),
        }
    return RunSummary(
        mode=config.mode,
        agent_kind=config.agent_kind,
        environment=config.environment_name,
        horizon=spec.horizon,
        seed=config.seed,
        replications=len(metrics),
        budget=config.resolved_budget(spec.horizon),
        benchmark_dual=policy.dual_scalar if math.isfinite(policy.dual_scalar) else None,
        benchmark_value_per_round=policy.expected_reward_per_round,
        benchmark_value_se=policy.reward_se,
        mean_regret=_mean(regrets),
        se_regret=_se(regrets),
        mean_realized_regret=_mean([item.realized_regret for item in metrics]),
        mean_spend=_mean(spends),
        max_spend=max(spends, default=0.0),
        mean_coverage=_mean(coverage) if coverage else None,
        replicates=metrics,
        **violation,
    )


def run(config: SimulationConfig) -> RunResult:
    """Run every replication and aggregate; results are ordered by replication index."""
    policy = compute_benchmark(config)
    indices = range(config.replications)
    if config.workers > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            futures = [executor.submit(run_replication, config, index, policy) for index in indices]
            results = [future.result() for future in futures]
    else:
        results = [run_replication(config, index, policy) for index in indices]
    results.sort(key=lambda item: item.index)
    summary = aggregate(config, policy, [item.metrics for item in results])
    return RunResult(
        config=config,
        policy=policy,
        logs=[item.logs for item in results],
        summary=summary,
    )


@dataclass(frozen=True)
class BenchTiming:
    mode: Mode
    horizon: int
    rounds: int
    elapsed_ms: int


def bench(config: SimulationConfig, modes: list[Mode] | None = None) -> list[BenchTiming]:
    """Wall-clock one learning-agent episode per mode on the configured environment."""
    timings: list[BenchTiming] = []
    for mode in modes or list(Mode):
        payload = config.model_dump(exclude={"budget", "budget_fraction"})
        payload.update(mode=mode, agent_kind=AgentKind.LTE, replications=1, workers=1)
        if mode is Mode.BGT:
            payload["budget_fraction"] = 0.5
        mode_config = SimulationConfig.model_validate(payload)
        spec = mode_config.environment_spec()
        policy = compute_benchmark(mode_config)
        start_ms = monotonic_ms()
        result = run_replication(mode_config, 0, policy)
        timings.append(
            BenchTiming(
                mode=mode,
                horizon=spec.horizon,
                rounds=result.metrics.rounds,
                elapsed_ms=max(0, monotonic_ms() - start_ms),
            )
        )
    return timings
