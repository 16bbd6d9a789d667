"""CSV tables, JSON summaries and binary dumps written by the commands.

CSV bodies depend only on the resolved configuration; the timestamp lives
in the ``#`` header comment, so re-running a command reproduces the body
byte for byte.
"""

import csv
from datetime import datetime, timezone
import io
import os
from pathlib import Path
import tempfile
from typing import Any

import numpy as np

from cli.core.hashing import artifact_digest, canonical_json, config_digest
from shared.config import get_fields_dir, get_reports_dir
from shared.contracts.martingale import PathTerminals
from shared.contracts.runs import RunSummary
from shared.logs import get_logger

logger = get_logger(__name__)

Row = list[Any]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_body(columns: list[str], rows: list[Row]) -> str:
    """RFC 4180 style: CRLF line ends, quotes only where needed."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def header_comment(command: str, config: dict[str, Any]) -> str:
    written = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return (
        f"# riesz-bounds {command}\r\n"
        f"# config: {canonical_json(config)}\r\n"
        f"# written: {written}\r\n"
    )


def strip_header(text: str) -> str:
    """The CSV body of a written table."""
    return "".join(
        line for line in text.splitlines(keepends=True) if not line.startswith("#")
    )


def atomic_write(path: Path, data: bytes) -> Path:
    """Write through a temporary file in the target directory, then replace."""
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_fd, temp_name = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(temp_fd, "wb") as f:
            f.write(data)
        os.replace(temp_name, path)
    except BaseException:
        Path(temp_name).unlink(missing_ok=True)
        raise
    return path


def run_stem(command: str, config: dict[str, Any]) -> str:
    """File stem shared by every output of one run."""
    return f"{command}-{config_digest(config)[:12]}"


def write_csv(
    out: Path,
    command: str,
    config: dict[str, Any],
    columns: list[str],
    rows: list[Row],
    suffix: str = "",
) -> Path:
    """Write a table to <out>/reports/<command>-<digest><suffix>.csv."""
    path = get_reports_dir(out) / f"{run_stem(command, config)}{suffix}.csv"
    text = header_comment(command, config) + csv_body(columns, rows)
    atomic_write(path, text.encode("utf-8"))
    logger.info(f"wrote {len(rows)} rows to {path}")
    return path


def write_summary(
    out: Path,
    command: str,
    config: dict[str, Any],
    passed: bool,
    results: dict[str, Any],
    artifacts: list[Path] | None = None,
) -> Path:
    """Write the JSON summary of a run; artifact files are listed by digest."""
    summary = RunSummary(
        command=command,
        passed=passed,
        config=config,
        digest=config_digest(config),
        results=results,
        artifacts={p.name: artifact_digest(p) for p in artifacts or []},
    )
    path = get_reports_dir(out) / f"{run_stem(command, config)}.json"
    atomic_write(path, summary.model_dump_json(indent=2).encode("utf-8"))
    return path


def field_path(out: Path, command: str, config: dict[str, Any], ext: str) -> Path:
    path = get_fields_dir(out) / f"{run_stem(command, config)}.{ext}"
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_terminals(path: Path, terminals: PathTerminals) -> Path:
    """Dump the path terminals as a compressed .npz archive."""
    buffer = io.BytesIO()
    np.savez_compressed(
        buffer,
        X=terminals.X,
        Y=terminals.Y,
        z0=terminals.z0,
        zT=terminals.zT,
        qvX=terminals.qvX,
        qvY=terminals.qvY,
        escaped=terminals.escaped,
        start_index=terminals.start_index,
        weights=terminals.weights,
    )
    return atomic_write(path, buffer.getvalue())


# ============================================================================
# Collected report
# ============================================================================


def collect_summaries(reports_dir: Path) -> list[RunSummary]:
    """Every run summary below reports_dir, ordered by command and digest."""
    summaries = []
    for path in sorted(reports_dir.glob("*.json")):
        try:
            summaries.append(RunSummary.model_validate_json(path.read_text()))
        except ValueError as e:
            logger.warning(f"skipping {path.name}: {e}")
    return sorted(summaries, key=lambda s: (s.command, s.digest))


def _flatten(prefix: str, value: Any) -> list[tuple[str, Any]]:
    if isinstance(value, dict):
        items = []
        for key in sorted(value):
            name = f"{prefix}.{key}" if prefix else str(key)
            items.extend(_flatten(name, value[key]))
        return items
    if isinstance(value, list):
        if all(not isinstance(v, dict | list) for v in value):
            return [(prefix, ";".join(_cell(v) for v in value))]
        items = []
        for i, v in enumerate(value):
            items.extend(_flatten(f"{prefix}[{i}]", v))
        return items
    return [(prefix, value)]


REPORT_COLUMNS = ["command", "digest", "passed", "key", "value"]


def summary_rows(summaries: list[RunSummary]) -> list[Row]:
    """Long-format rows: one per scalar result of every run."""
    rows: list[Row] = []
    for s in summaries:
        for key, value in _flatten("", s.results):
            rows.append([s.command, s.digest[:12], s.passed, key, value])
    return rows
