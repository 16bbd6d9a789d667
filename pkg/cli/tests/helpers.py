"""Shared test helpers and utilities."""

import json
from pathlib import Path

from click.testing import CliRunner, Result

from cli.__main__ import cli
from cli.core.reports import strip_header


def invoke(out: Path, *args: str) -> Result:
    """
    Helper: Run the CLI with --out pointed at a test directory.

    Args:
        out: Output directory of the run
        args: Command and options

    Returns:
        The click Result; exit codes are not checked here
    """
    return CliRunner().invoke(cli, ["--out", str(out), *args])


def read_summary(out: Path, command: str) -> dict:
    """
    Helper: Load the single JSON summary a command wrote.

    Raises:
        AssertionError: If there is not exactly one summary of that command
    """
    paths = sorted((out / "reports").glob(f"{command}-*.json"))
    assert len(paths) == 1, f"expected one {command} summary, found {paths}"
    return json.loads(paths[0].read_text())


def read_table(out: Path, command: str, suffix: str = "") -> list[list[str]]:
    """Helper: CSV rows of a written table, header comment dropped."""
    paths = sorted((out / "reports").glob(f"{command}-*{suffix}.csv"))
    paths = [p for p in paths if suffix or p.stem.count("-") == command.count("-") + 1]
    assert len(paths) == 1, f"expected one {command} table, found {paths}"
    body = strip_header(paths[0].open(newline="").read())
    return [line.split(",") for line in body.split("\r\n") if line]


def table_body(out: Path, command: str) -> str:
    """Helper: The CSV body of the only table of a command."""
    paths = sorted((out / "reports").glob(f"{command}-*.csv"))
    assert len(paths) == 1
    return strip_header(paths[0].open(newline="").read())
