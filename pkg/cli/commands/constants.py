"""Constants command implementation."""

import click

from cli.core.reports import write_summary
from cli.options import (
    RunContext,
    exit_with_error,
    finish,
    p_option,
    resolved_config,
    tau_option,
)
from shared.types import Params

FIELDS = [
    "p_star_minus_1",
    "k_lam",
    "k_cone",
    "c_B",
    "alpha_p",
    "in_T",
    "operator_norm_target",
]


@click.command()
@p_option()
@tau_option()
@click.pass_obj
def constants(run: RunContext, p, tau):
    """
    Print the constants derived from (p, tau).

    p*-1, the laminate and cone slopes, c_B, alpha_p, membership in T and
    the operator norm target ((p*-1)^2 + tau^2)^(1/2).
    """
    try:
        params = Params(p=p, tau=tau)
        record = params.model_dump()
        for name in FIELDS:
            value = record[name]
            shown = "undefined" if value is None else value
            click.echo(f"{name}: {shown}")
        write_summary(run.out, "constants", resolved_config(run), True, record)
    except Exception as e:
        exit_with_error(e)
    finish(True)
