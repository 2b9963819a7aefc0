from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ltebid.learning.cdf import SplitCdfEstimate
from ltebid.types import Mode

TIE_TOLERANCE = 1e-12
NEGATIVE_GAP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ModeParams:
    """Mode-tagged dual state feeding the shadow price."""

    mode: Mode
    pacing_scale: float = 1.0
    mu: float = 0.0
    lam: float = 0.0
    ceiling: float = math.inf
    ros_target: float = 1.0

    def __post_init__(self) -> None:
        if self.mode is Mode.BGT:
            if self.pacing_scale < 1.0:
                raise ValueError(f"pacing scale Z = T/B must be >= 1, got {self.pacing_scale}")
            if not 0.0 <= self.mu <= 1.0:
                raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if self.mode is Mode.ROS and not 0.0 <= self.lam <= self.ceiling:
            raise ValueError(f"lambda={self.lam} outside [0, {self.ceiling}]")


@dataclass(frozen=True)
class BranchDecision:
    b_star_0: float
    b_star_1: float
    candidates: np.ndarray
    branch: int
    info_bid: float
    scores: np.ndarray | None = None
    rho: float = 0.0
    fallback: bool = False

    @property
    def info_index(self) -> int:
        return int(np.flatnonzero(self.candidates == self.info_bid)[0])


def shadow_price(params: ModeParams) -> tuple[float, float]:
    """(gamma, a) with a = 1 + gamma."""
    if params.mode is Mode.BGT:
        gamma = params.pacing_scale * params.mu
    elif params.mode is Mode.ROS:
        gamma = params.ros_target * params.lam / (1.0 + params.lam)
    else:
        gamma = 0.0
    return gamma, 1.0 + gamma


def kappa_br(density_bound: float) -> float:
    """Branch threshold min{1/4, 1/(40 L)}."""
    if density_bound <= 0:
        raise ValueError(f"density bound must be > 0, got {density_bound}")
    return min(0.25, 1.0 / (40.0 * density_bound))


def z_threshold(beta: float, dimension: int, horizon: int, epsilon: float) -> float:
    return min(beta * math.sqrt(dimension / horizon) + 4.0 * epsilon, 0.5)


def branch_scores(f_grid: np.ndarray, s: float, a: float, bids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Estimated Lagrangian scores of the control (0) and treated (1) branches.

    The two differ by the bid-independent shift -s.
    """
    score_0 = f_grid * (s - a * bids)
    score_1 = -(1.0 - f_grid) * s - a * bids * f_grid
    return score_0, score_1


def branch_ucbs(
    score_0: np.ndarray,
    score_1: np.ndarray,
    f_grid: np.ndarray,
    rho: float,
    epsilon: float,
    c_br: float,
) -> tuple[np.ndarray, np.ndarray]:
    bonus = c_br * epsilon
    return score_0 + f_grid * rho + bonus, score_1 + (1.0 - f_grid) * rho + bonus


def first_argmax(values: np.ndarray) -> int:
    return int(np.flatnonzero(values >= values.max() - TIE_TOLERANCE)[0])


def last_argmax(values: np.ndarray) -> int:
    return int(np.flatnonzero(values >= values.max() - TIE_TOLERANCE)[-1])


def candidate_interval(
    ucb_0: np.ndarray,
    ucb_1: np.ndarray,
    grid: np.ndarray,
    f_grid: np.ndarray,
    kappa: float,
) -> BranchDecision:
    """Bracket between the branch maximizers, with the treated-branch test.

    The treated maximizer takes the smallest tied bid and the control maximizer the
    largest, so the bracket holds every interior maximizer.
    """
    if len(grid) == 0:
        raise ValueError("grid must be nonempty")
    bids, first = np.unique(grid, return_index=True)
    ucb_0, ucb_1, f_grid = ucb_0[first], ucb_1[first], f_grid[first]
    b_star_0 = float(bids[last_argmax(ucb_0)])
    b_star_1 = float(bids[first_argmax(ucb_1)])
    lo, hi = min(b_star_0, b_star_1), max(b_star_0, b_star_1)
    inside = (bids >= lo) & (bids <= hi)
    candidates = bids[inside]
    weights = f_grid[inside] * (1.0 - f_grid[inside])
    f_star_1 = float(f_grid[np.flatnonzero(bids == b_star_1)[0]])
    return BranchDecision(
        b_star_0=b_star_0,
        b_star_1=b_star_1,
        candidates=candidates,
        branch=int(f_star_1 > kappa),
        info_bid=float(candidates[first_argmax(weights)]),
    )


def squarecb_choose(
    scores: np.ndarray,
    greedy_index: int,
    info_index: int,
    alpha: float,
    rng: np.random.Generator,
) -> tuple[int, float, bool]:
    """Play the information action with probability 1 / (2 + alpha * gap).

    Returns (chosen index, p, negative-gap flag). One uniform is consumed per call.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    gap = float(scores[greedy_index] - scores[info_index])
    negative = gap < -NEGATIVE_GAP_TOLERANCE
    p = 1.0 / (2.0 + alpha * max(gap, 0.0))
    explore = rng.random() < p
    return (info_index if explore else greedy_index), p, negative


def safe_truncate(bid: float, est: SplitCdfEstimate, z: float) -> tuple[float, bool]:
    """Clamp to [F^-1(z), F^-1(1 - z)]; a crossed interval yields the median planning point."""
    if z <= 0.0:
        return bid, False
    lower = est.generalized_inverse(z)
    upper = est.generalized_inverse(1.0 - z)
    if lower > upper:
        return est.generalized_inverse(0.5), True
    return min(max(bid, lower), upper), False
