"""Option types, shared options and exit handling of the CLI."""

from collections.abc import Callable
from dataclasses import dataclass
import math
from pathlib import Path
import re
import sys
from typing import Any, NoReturn

import click
from pydantic import ValidationError

from cli.core.config_file import option_key
from shared.errors import RieszBoundsError
from shared.logs import get_logger

logger = get_logger(__name__)

EXIT_PASS = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_STAGE = 3
EXIT_UNEXPECTED = 4

_EXP = re.compile(r"^e\^?(?P<k>[-+]?\d+(\.\d*)?)$")


class NValue(click.ParamType):
    """A truncation level N > 1, given as a number or as ``e^K``."""

    name = "N"

    def convert(self, value, param, ctx):
        if isinstance(value, int | float):
            number = float(value)
        else:
            text = str(value).strip()
            match = _EXP.match(text)
            try:
                number = math.exp(float(match["k"])) if match else float(text)
            except (ValueError, OverflowError):
                self.fail(f"{value!r} is neither a number nor e^K", param, ctx)
        if not (math.isfinite(number) and number > 1.0):
            self.fail(f"N must be a finite number > 1, got {value!r}", param, ctx)
        return number


N_VALUE = NValue()


@dataclass
class RunContext:
    """Group-level settings handed to every subcommand."""

    out: Path
    threads: int


def resolved_config(run: RunContext) -> dict[str, Any]:
    """The resolved options of the running command plus the group settings."""
    ctx = click.get_current_context()
    config = {key: _plain(value) for key, value in ctx.params.items()}
    config["threads"] = run.threads
    return dict(sorted(config.items()))


def _plain(value):
    if isinstance(value, tuple | list):
        return [_plain(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def exit_with_error(e: Exception) -> NoReturn:
    """Print the error and exit with its category."""
    if isinstance(e, ValidationError):
        message = "; ".join(
            f"{'.'.join(str(part) for part in err['loc']) or 'input'}: {err['msg']}"
            for err in e.errors()
        )
        click.echo(f"Error: {message}", err=True)
        sys.exit(EXIT_INVALID)
    if isinstance(e, ValueError):
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_INVALID)
    if isinstance(e, RieszBoundsError):
        click.echo(f"Error: {type(e).__name__}: {e}", err=True)
        sys.exit(EXIT_STAGE)
    logger.exception("unexpected failure")
    click.echo(f"Error: Unexpected error: {e}", err=True)
    sys.exit(EXIT_UNEXPECTED)


def fit_default_map(
    default_map: dict[str, dict[str, Any]], group: click.Group
) -> dict[str, dict[str, Any]]:
    """
    Rename config keys to parameter names and shape values per option.

    Keys are option names (``N``, ``layer_fraction``); a key no command knows
    is an error.

    Raises:
        ValueError: On an unknown key, or a list given to a single-valued option
    """
    known: set[str] = set()
    fitted: dict[str, dict[str, Any]] = {}
    for name, entries in default_map.items():
        params = {}
        for param in group.commands[name].params:
            for opt in [*param.opts, param.name or ""]:
                params[option_key(opt)] = param
        fitted[name] = {}
        for key, value in entries.items():
            param = params.get(key)
            if param is None or param.name is None:
                continue
            known.add(key)
            if param.multiple and isinstance(value, str):
                value = [value]
            elif not param.multiple and isinstance(value, list):
                raise ValueError(f"{key} takes a single value, got {value}")
            fitted[name][param.name] = value
    unknown = {k for entries in default_map.values() for k in entries} - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return fitted


def finish(passed: bool) -> NoReturn:
    click.echo("PASS" if passed else "FAIL")
    sys.exit(EXIT_PASS if passed else EXIT_FAILED)


# ============================================================================
# Shared options
# ============================================================================


def p_option(default: float = 2.0) -> Callable:
    return click.option(
        "--p",
        "p",
        type=float,
        default=default,
        show_default=True,
        help="Exponent p > 1",
    )


def tau_option(default: float = 0.0) -> Callable:
    return click.option(
        "--tau",
        "tau",
        type=float,
        default=default,
        show_default=True,
        help="Perturbation parameter tau",
    )


def cutoff_option(default: str = "e^4") -> Callable:
    return click.option(
        "--N",
        "cutoff",
        type=N_VALUE,
        default=default,
        show_default=True,
        help="Truncation level N > 1 (a number or e^K)",
    )


def cutoffs_option(defaults: tuple[str, ...]) -> Callable:
    return click.option(
        "--N",
        "cutoffs",
        type=N_VALUE,
        multiple=True,
        default=defaults,
        show_default=True,
        help="Truncation levels; repeat the option for a sweep",
    )


def seed_option() -> Callable:
    return click.option(
        "--seed",
        type=int,
        default=None,
        help="Seed of randomized stages [default: RIESZ_BOUNDS_SEED]",
    )


def tol_option(default: float) -> Callable:
    return click.option(
        "--tol", type=float, default=default, show_default=True, help="Pass tolerance"
    )
