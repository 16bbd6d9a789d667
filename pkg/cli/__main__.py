"""CLI entry point."""

import logging
from pathlib import Path

import click

from cli.commands.biconvex_check import biconvex_check
from cli.commands.burkholder_scan import burkholder_scan
from cli.commands.constants import constants
from cli.commands.laminate_ratio import laminate_ratio
from cli.commands.martingale import martingale
from cli.commands.pipeline import pipeline
from cli.commands.realize import realize
from cli.commands.report import report
from cli.commands.riesz_check import riesz_check
from cli.commands.staircase import staircase
from cli.core.config_file import load_default_map
from cli.options import RunContext, fit_default_map
from shared.config import ensure_directories, get_out_dir, get_threads
from shared.logs import set_level


@click.group()
@click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="key=value run configuration; 'command.key' scopes a key to one command",
)
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=None,
    help="Worker threads [default: RIESZ_BOUNDS_THREADS or the CPU count]",
)
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Output directory [default: RIESZ_BOUNDS_OUT or .riesz-bounds]",
)
@click.option("--verbose", "-v", is_flag=True, help="Log stage progress to stderr")
@click.pass_context
def cli(ctx, config_file, threads, out, verbose):
    """riesz-bounds - numerical checks of the sharp L^p bound of R1^2 - R2^2."""
    if verbose:
        set_level(logging.INFO)
    if config_file is not None:
        try:
            default_map = load_default_map(config_file, list(cli.commands))
            ctx.default_map = fit_default_map(default_map, cli)
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint="--config") from e
    out = out or get_out_dir()
    ensure_directories(out)
    ctx.obj = RunContext(
        out=out,
        threads=threads or get_threads(),
    )


# Register commands
cli.add_command(constants)
cli.add_command(laminate_ratio)
cli.add_command(biconvex_check)
cli.add_command(staircase)
cli.add_command(realize)
cli.add_command(pipeline)
cli.add_command(riesz_check)
cli.add_command(martingale)
cli.add_command(burkholder_scan)
cli.add_command(report)


if __name__ == "__main__":
    cli()
