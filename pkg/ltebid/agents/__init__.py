from __future__ import annotations

from ltebid.agents.baselines import BenchmarkBidder, UniformBidder
from ltebid.agents.budget import BudgetAgent, budget_branch_oracle, run_budget_episode
from ltebid.agents.core import (
    BranchDecision,
    ModeParams,
    branch_scores,
    branch_ucbs,
    candidate_interval,
    kappa_br,
    safe_truncate,
    shadow_price,
    squarecb_choose,
    z_threshold,
)
from ltebid.agents.episode import BidDecision, Outcome, Stopped, run_episode
from ltebid.agents.hull import LowerHull, SafeGrid, SafeGridPoint, build_safe_grid, lower_hull
from ltebid.agents.ros import RosAgent, estimate_slater, ros_candidates, run_ros_episode

__all__ = [
    "BenchmarkBidder",
    "BidDecision",
    "BranchDecision",
    "BudgetAgent",
    "LowerHull",
    "ModeParams",
    "Outcome",
    "RosAgent",
    "SafeGrid",
    "SafeGridPoint",
    "Stopped",
    "UniformBidder",
    "branch_scores",
    "branch_ucbs",
    "budget_branch_oracle",
    "build_safe_grid",
    "candidate_interval",
    "estimate_slater",
    "kappa_br",
    "lower_hull",
    "ros_candidates",
    "run_budget_episode",
    "run_episode",
    "run_ros_episode",
    "safe_truncate",
    "shadow_price",
    "squarecb_choose",
    "z_threshold",
]
