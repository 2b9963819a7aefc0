from __future__ import annotations

import logging

import numpy as np
from numpy.typing import ArrayLike

from ltebid.harness.config import SimulationConfig
from ltebid.harness.runner import run
from ltebid.harness.schemas import SweepRow, SweepSummary
from ltebid.types import AgentKind, Mode

logger = logging.getLogger(__name__)

_POSITIVE_FLOOR = 1e-12


def fit_loglog_slope(horizons: ArrayLike, values: ArrayLike) -> float:
    """Least-squares slope of log(value) against log(T); values are floored at a tiny positive."""
    x = np.log(np.asarray(horizons, dtype=float))
    y = np.log(np.clip(np.asarray(values, dtype=float), _POSITIVE_FLOOR, None))
    if len(x) < 2:
        raise ValueError("slope fit needs at least two horizons")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def sweep(
    config: SimulationConfig,
    horizons: list[int] | None = None,
    agent_kind: AgentKind | None = None,
) -> SweepSummary:
    """Paired regret (and RoS violation) per horizon, plus the fitted log-log slopes."""
    grid = sorted(set(horizons or config.horizons))
    if len(grid) < 3:
        raise ValueError(f"sweep needs at least 3 distinct horizons, got {grid}")
    kind = agent_kind or config.agent_kind

    rows: list[SweepRow] = []
    for horizon in grid:
        payload = config.model_dump()
        payload.update(horizon=horizon, agent_kind=kind)
        summary = run(SimulationConfig.model_validate(payload)).summary
        logger.info("horizon %d: mean regret %.3f", horizon, summary.mean_regret)
        rows.append(
            SweepRow(
                horizon=horizon,
                mean_regret=summary.mean_regret,
                se_regret=summary.se_regret,
                mean_violation=summary.mean_violation,
                se_violation=summary.se_violation,
                mean_shortfall=summary.mean_shortfall,
            )
        )

    violation_slope = None
    if config.mode is Mode.ROS:
        violation_slope = fit_loglog_slope(grid, [row.mean_violation or 0.0 for row in rows])
    return SweepSummary(
        mode=config.mode,
        agent_kind=kind,
        regret_slope=fit_loglog_slope(grid, [row.mean_regret for row in rows]),
        violation_slope=violation_slope,
        rows=rows,
    )
