from __future__ import annotations

SCHEMA_VERSION = "1"

ROUND_LOG_COLUMNS = [
    "schema_version",
    "replication",
    "t",
    "phase",
    "x",
    "bid",
    "won",
    "payment",
    "realized_reward",
    "expected_reward",
    "expected_margin",
    "uplift_true",
    "uplift_hat",
    "f_hat",
    "eval_size",
    "epsilon",
    "rho",
    "beta",
    "z",
    "branch",
    "fallback",
    "fallback_reason",
    "p_mix",
    "dual",
    "dual_ceiling",
    "hull_size",
    "g_opt",
    "flags",
]

SWEEP_COLUMNS = [
    "horizon",
    "mean_regret",
    "se_regret",
    "mean_violation",
    "se_violation",
    "mean_shortfall",
]

ROUND_LOG_FORMATS = ("csv", "jsonl", "parquet")
