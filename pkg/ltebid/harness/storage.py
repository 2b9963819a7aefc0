from __future__ import annotations

import csv
import importlib.util
import io
import json
import logging
import os
import tempfile
from collections.abc import Iterable
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from ltebid.harness.constants import ROUND_LOG_COLUMNS, ROUND_LOG_FORMATS, SWEEP_COLUMNS
from ltebid.harness.schemas import (
    RunSummary,
    SweepSummary,
    ValidationReport,
    export_cell,
    round_log_from_row,
    round_log_row,
)
from ltebid.types import RoundLog

logger = logging.getLogger(__name__)


class OutputError(OSError):
    """A write or read of a run artifact failed; the message names the path."""


def _atomic_write(path: Path, payload: bytes) -> None:
    """Write via a sibling temp file so a failed write never leaves a partial artifact."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        handle, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(handle, "wb") as stream:
                stream.write(payload)
            os.replace(temp_name, path)
        except BaseException:
            Path(temp_name).unlink(missing_ok=True)
            raise
    except OSError as exc:
        raise OutputError(f"{path}: {exc.strerror or exc}") from exc


def _flat_rows(logs: list[list[RoundLog]]) -> list[dict[str, Any]]:
    return [round_log_row(log, replication) for replication, episode in enumerate(logs) for log in episode]


def round_logs_csv(logs: list[list[RoundLog]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=ROUND_LOG_COLUMNS, lineterminator="\r\n")
    writer.writeheader()
    writer.writerows(_flat_rows(logs))
    return buffer.getvalue()


def write_round_logs(logs: list[list[RoundLog]], output_path: Path, fmt: str = "csv") -> int:
    """Export every replication's rounds into one table; returns the row count."""
    if fmt not in ROUND_LOG_FORMATS:
        raise ValueError(f"unsupported format: {fmt}")
    rows = _flat_rows(logs)

    if fmt == "csv":
        _atomic_write(output_path, round_logs_csv(logs).encode("utf-8"))
        return len(rows)

    if fmt == "jsonl":
        lines = [json.dumps(row, sort_keys=False) for row in rows]
        _atomic_write(output_path, "".join(line + "\n" for line in lines).encode("utf-8"))
        return len(rows)

    if importlib.util.find_spec("pandas") is None or importlib.util.find_spec("pyarrow") is None:
        raise RuntimeError("parquet export requires pandas and pyarrow")
    import pandas as pd

    frame = pd.DataFrame(rows, columns=ROUND_LOG_COLUMNS).astype(str)
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_parquet(output_path, index=False)
    except OSError as exc:
        output_path.unlink(missing_ok=True)
        raise OutputError(f"{output_path}: {exc}") from exc
    return len(rows)


def _group(rows: Iterable[dict[str, Any]], replications: int | None = None) -> list[list[RoundLog]]:
    grouped: dict[int, list[RoundLog]] = {}
    for row in rows:
        replication, log = round_log_from_row(row)
        grouped.setdefault(replication, []).append(log)
    count = max(grouped) + 1 if grouped else 0
    if replications is not None:
        if replications < count:
            raise ValueError(f"rows reference replication {count - 1}, expected {replications}")
        count = replications
    return [grouped.get(index, []) for index in range(count)]


def parse_round_logs(
    path: Path, fmt: str | None = None, *, replications: int | None = None
) -> list[list[RoundLog]]:
    """Inverse of ``write_round_logs``; the format defaults to the file suffix.

    Episodes with no rounds leave no rows, so pass ``replications`` (from
    ``summary.json``) to keep trailing empty episodes.
    """
    fmt = fmt or path.suffix.lstrip(".")
    if fmt not in ROUND_LOG_FORMATS:
        raise ValueError(f"unsupported format: {fmt}")
    try:
        if fmt == "csv":
            with path.open("r", encoding="utf-8", newline="") as handle:
                return _group(csv.DictReader(handle), replications)
        if fmt == "jsonl":
            with path.open("r", encoding="utf-8") as handle:
                return _group((json.loads(line) for line in handle if line.strip()), replications)
    except OSError as exc:
        raise OutputError(f"{path}: {exc.strerror or exc}") from exc

    if importlib.util.find_spec("pandas") is None or importlib.util.find_spec("pyarrow") is None:
        raise RuntimeError("parquet import requires pandas and pyarrow")
    import pandas as pd

    frame = pd.read_parquet(path)
    return _group(frame.to_dict(orient="records"), replications)


def _model_json(model: BaseModel) -> bytes:
    return (json.dumps(model.model_dump(mode="json"), sort_keys=True, indent=2) + "\n").encode("utf-8")


def write_summary(summary: RunSummary, output_path: Path) -> None:
    _atomic_write(output_path, _model_json(summary))


def read_summary(path: Path) -> RunSummary:
    try:
        return RunSummary.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise OutputError(f"{path}: {exc.strerror or exc}") from exc


def write_sweep(summary: SweepSummary, out_dir: Path) -> tuple[Path, Path]:
    """Plot-ready ``sweep.csv`` plus ``sweep.json`` carrying the fitted slopes."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=SWEEP_COLUMNS, lineterminator="\r\n")
    writer.writeheader()
    for row in summary.rows:
        writer.writerow({key: export_cell(value) for key, value in row.model_dump().items()})
    csv_path, json_path = out_dir / "sweep.csv", out_dir / "sweep.json"
    _atomic_write(csv_path, buffer.getvalue().encode("utf-8"))
    _atomic_write(json_path, _model_json(summary))
    return csv_path, json_path


def write_validation_report(report: ValidationReport, out_dir: Path) -> Path:
    path = out_dir / "validation.json"
    _atomic_write(path, _model_json(report))
    return path


def emit_outputs(
    logs: list[list[RoundLog]],
    summary: RunSummary,
    out_dir: Path,
    fmt: str = "csv",
) -> dict[str, Path]:
    """Write ``rounds.<fmt>`` and ``summary.json``; on failure neither is left behind."""
    rounds_path = out_dir / f"rounds.{fmt}"
    summary_path = out_dir / "summary.json"
    try:
        count = write_round_logs(logs, rounds_path, fmt)
        write_summary(summary, summary_path)
    except (OutputError, RuntimeError):
        for path in (rounds_path, summary_path):
            if path.is_file():
                path.unlink()
        raise
    logger.info("wrote %d rounds to %s", count, rounds_path)
    return {"rounds": rounds_path, "summary": summary_path}
