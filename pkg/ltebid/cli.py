from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Any

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from ltebid.harness.config import SimulationConfig, apply_overrides, load_config
from ltebid.harness.constants import ROUND_LOG_FORMATS
from ltebid.harness.runner import bench as bench_modes
from ltebid.harness.runner import run
from ltebid.harness.schemas import RunSummary, SweepSummary, ValidationReport
from ltebid.harness.storage import OutputError, emit_outputs, write_sweep, write_validation_report
from ltebid.harness.sweep import sweep as sweep_horizons
from ltebid.harness.validate import validate as validate_config
from ltebid.types import AgentKind, Mode, RoundLog
from ltebid.utils import configure_logging

app = typer.Typer(help="Constrained first-price bidding simulator")
console = Console()

ConfigOption = Annotated[Path | None, typer.Option("--config", "-c", help="JSON config file")]
SeedOption = Annotated[int | None, typer.Option("--seed", help="Master seed")]
OutDirOption = Annotated[Path | None, typer.Option("--out-dir", "-o", help="Output directory")]
ModeOption = Annotated[Mode | None, typer.Option("--mode", "-m", help="unc|bgt|ros")]
HorizonOption = Annotated[int | None, typer.Option("--horizon", "-T", help="Rounds per episode")]
ReplicationsOption = Annotated[int | None, typer.Option("--replications", "-n", help="Seeds per run")]
WorkersOption = Annotated[int | None, typer.Option("--workers", "-w", help="Worker processes")]
PresetOption = Annotated[str | None, typer.Option("--preset", help="Shipped environment name")]
SetOption = Annotated[
    list[str] | None,
    typer.Option("--set", help="Override a config key, e.g. agent.c_eps=0.25 (repeatable)"),
]
VerboseOption = Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging")]


def _optional_float(value: float | None) -> str:
    if value is None:
        return ""
    return f"{value:.4f}"


def _render_validation_error(exc: ValidationError) -> None:
    table = Table(title="Invalid configuration")
    table.add_column("location")
    table.add_column("message")
    for error in exc.errors():
        table.add_row(".".join(str(part) for part in error["loc"]) or "(root)", error["msg"])
    console.print(table)


def _build_config(
    config: Path | None,
    *,
    seed: int | None = None,
    out_dir: Path | None = None,
    mode: Mode | None = None,
    horizon: int | None = None,
    replications: int | None = None,
    workers: int | None = None,
    preset: str | None = None,
    assignments: list[str] | None = None,
    extra: dict[str, Any] | None = None,
) -> SimulationConfig:
    try:
        payload = load_config(config)
        flags = {
            "seed": seed,
            "out_dir": str(out_dir) if out_dir is not None else None,
            "mode": mode.value if mode is not None else None,
            "horizon": horizon,
            "replications": replications,
            "workers": workers,
            "environment": preset,
            **(extra or {}),
        }
        payload.update({key: value for key, value in flags.items() if value is not None})
        payload = apply_overrides(payload, assignments or [])
    except (OSError, ValueError) as exc:
        raise typer.BadParameter(str(exc)) from exc
    try:
        return SimulationConfig.model_validate(payload)
    except ValidationError as exc:
        _render_validation_error(exc)
        raise typer.Exit(code=2) from exc


def _summary_table(summary: RunSummary, paths: dict[str, Path]) -> Table:
    table = Table(title=f"Run summary ({summary.mode}, {summary.agent_kind})")
    table.add_column("field")
    table.add_column("value")
    table.add_row("environment", summary.environment)
    table.add_row("horizon", str(summary.horizon))
    table.add_row("replications", str(summary.replications))
    table.add_row("budget", _optional_float(summary.budget))
    table.add_row("benchmark_value_per_round", _optional_float(summary.benchmark_value_per_round))
    table.add_row("mean_regret", _optional_float(summary.mean_regret))
    table.add_row("se_regret", _optional_float(summary.se_regret))
    table.add_row("mean_realized_regret", _optional_float(summary.mean_realized_regret))
    table.add_row("mean_spend", _optional_float(summary.mean_spend))
    table.add_row("max_spend", _optional_float(summary.max_spend))
    table.add_row("mean_violation", _optional_float(summary.mean_violation))
    table.add_row("mean_shortfall", _optional_float(summary.mean_shortfall))
    table.add_row("mean_coverage", _optional_float(summary.mean_coverage))
    for name, path in paths.items():
        table.add_row(name, str(path))
    return table


@app.command()
def simulate(
    config: ConfigOption = None,
    seed: SeedOption = None,
    out_dir: OutDirOption = None,
    mode: ModeOption = None,
    horizon: HorizonOption = None,
    replications: ReplicationsOption = None,
    workers: WorkersOption = None,
    preset: PresetOption = None,
    assignments: SetOption = None,
    fmt: Annotated[str | None, typer.Option("--format", "-f", help="csv|jsonl|parquet")] = None,
    agent_kind: Annotated[
        AgentKind | None, typer.Option("--agent", help="lte|uniform|benchmark")
    ] = None,
    verbose: VerboseOption = False,
) -> None:
    """Run replications and write round logs plus summary.json."""
    configure_logging(verbose)
    normalized = fmt.lower() if fmt is not None else None
    if normalized is not None and normalized not in ROUND_LOG_FORMATS:
        raise typer.BadParameter("format must be csv, jsonl, or parquet")
    extra: dict[str, Any] = {"round_format": normalized}
    if agent_kind is not None:
        extra["agent_kind"] = agent_kind.value
    settings = _build_config(
        config,
        seed=seed,
        out_dir=out_dir,
        mode=mode,
        horizon=horizon,
        replications=replications,
        workers=workers,
        preset=preset,
        assignments=assignments,
        extra=extra,
    )
    result = run(settings)
    try:
        paths = emit_outputs(result.logs, result.summary, settings.out_dir, settings.round_format)
    except (OutputError, RuntimeError) as exc:
        console.print(f"[red]{exc}[/red]")
        raise typer.Exit(code=1) from exc
    console.print(_summary_table(result.summary, paths))


def _parse_horizons(raw: str | None) -> list[int] | None:
    if raw is None:
        return None
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise typer.BadParameter(f"horizons must be comma-separated integers, got {raw!r}") from exc


def _sweep_table(summary: SweepSummary) -> Table:
    table = Table(title=f"Sweep ({summary.mode}, {summary.agent_kind})")
    for column in ["horizon", "mean_regret", "se_regret", "mean_violation", "mean_shortfall"]:
        table.add_column(column)
    for row in summary.rows:
        table.add_row(
            str(row.horizon),
            _optional_float(row.mean_regret),
            _optional_float(row.se_regret),
            _optional_float(row.mean_violation),
            _optional_float(row.mean_shortfall),
        )
    table.caption = f"regret slope {summary.regret_slope:.3f}"
    if summary.violation_slope is not None:
        table.caption += f", violation slope {summary.violation_slope:.3f}"
    return table


@app.command()
def sweep(
    config: ConfigOption = None,
    seed: SeedOption = None,
    out_dir: OutDirOption = None,
    mode: ModeOption = None,
    replications: ReplicationsOption = None,
    workers: WorkersOption = None,
    preset: PresetOption = None,
    assignments: SetOption = None,
    horizons: Annotated[
        str | None, typer.Option("--horizons", help="Comma-separated horizons, at least 3")
    ] = None,
    agent_kind: Annotated[
        AgentKind | None, typer.Option("--agent", help="lte|uniform|benchmark")
    ] = None,
    verbose: VerboseOption = False,
) -> None:
    """Regret (and RoS violation) across horizons with a log-log slope fit."""
    configure_logging(verbose)
    settings = _build_config(
        config,
        seed=seed,
        out_dir=out_dir,
        mode=mode,
        replications=replications,
        workers=workers,
        preset=preset,
        assignments=assignments,
    )
    try:
        summary = sweep_horizons(settings, _parse_horizons(horizons), agent_kind)
    except ValueError as exc:
        raise typer.BadParameter(str(exc)) from exc
    try:
        csv_path, json_path = write_sweep(summary, settings.out_dir)
    except OutputError as exc:
        console.print(f"[red]{exc}[/red]")
        raise typer.Exit(code=1) from exc
    console.print(_sweep_table(summary))
    console.print(f"Wrote {csv_path} and {json_path}")


def _validation_table(report: ValidationReport) -> Table:
    table = Table(title=f"Validation ({report.environment}, seed {report.seed})")
    for column in ["check", "status", "statistic", "target", "trials"]:
        table.add_column(column)
    for check in report.checks:
        table.add_row(
            check.name,
            "pass" if check.passed else "[red]FAIL[/red]",
            f"{check.statistic:.4f}",
            f"{check.target:.4f}",
            str(check.trials),
        )
    return table


@app.command()
def validate(
    config: ConfigOption = None,
    seed: SeedOption = None,
    out_dir: OutDirOption = None,
    mode: ModeOption = None,
    horizon: HorizonOption = None,
    preset: PresetOption = None,
    assignments: SetOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Monte Carlo pass rates of the estimator guarantees; exits 1 when any check fails."""
    configure_logging(verbose)
    settings = _build_config(
        config,
        seed=seed,
        out_dir=out_dir,
        mode=mode,
        horizon=horizon,
        preset=preset,
        assignments=assignments,
    )
    report = validate_config(settings)
    try:
        path = write_validation_report(report, settings.out_dir)
    except OutputError as exc:
        console.print(f"[red]{exc}[/red]")
        raise typer.Exit(code=1) from exc
    console.print(_validation_table(report))
    console.print(f"Wrote {path}")
    if not report.passed:
        console.print(json.dumps({"failures": report.failures}))
        raise typer.Exit(code=1)


@app.command()
def bench(
    config: ConfigOption = None,
    seed: SeedOption = None,
    horizon: HorizonOption = None,
    preset: PresetOption = None,
    assignments: SetOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Time one learning-agent episode per mode."""
    configure_logging(verbose)
    settings = _build_config(
        config, seed=seed, horizon=horizon, preset=preset, assignments=assignments
    )
    table = Table(title="Episode timings")
    for column in ["mode", "horizon", "rounds", "elapsed_ms", "ms_per_round"]:
        table.add_column(column)
    for timing in bench_modes(settings):
        per_round = timing.elapsed_ms / timing.rounds if timing.rounds else 0.0
        table.add_row(
            str(timing.mode),
            str(timing.horizon),
            str(timing.rounds),
            str(timing.elapsed_ms),
            f"{per_round:.3f}",
        )
    console.print(table)


_SCHEMAS = {
    "summary": RunSummary,
    "round": RoundLog,
    "config": SimulationConfig,
    "sweep": SweepSummary,
    "validation": ValidationReport,
}


@app.command()
def schema(
    name: Annotated[
        str, typer.Argument(help="summary|round|config|sweep|validation")
    ] = "summary",
) -> None:
    """Print the JSON schema of an output or config document."""
    model = _SCHEMAS.get(name)
    if model is None:
        raise typer.BadParameter(f"unknown schema {name!r}; choose from {', '.join(_SCHEMAS)}")
    console.print_json(json.dumps(model.model_json_schema()))


if __name__ == "__main__":
    app()
