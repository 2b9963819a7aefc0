from __future__ import annotations

from ltebid.harness.config import SimulationConfig, ValidationSettings, apply_overrides, load_config
from ltebid.harness.runner import RunResult, run, run_replication
from ltebid.harness.schemas import RunSummary, SummaryMetrics, SweepSummary, ValidationReport
from ltebid.harness.storage import OutputError, emit_outputs, parse_round_logs
from ltebid.harness.sweep import fit_loglog_slope, sweep
from ltebid.harness.validate import validate

__all__ = [
    "OutputError",
    "RunResult",
    "RunSummary",
    "SimulationConfig",
    "SummaryMetrics",
    "SweepSummary",
    "ValidationReport",
    "ValidationSettings",
    "apply_overrides",
    "emit_outputs",
    "fit_loglog_slope",
    "load_config",
    "parse_round_logs",
    "run",
    "run_replication",
    "sweep",
    "validate",
]
