"""Laminate-ratio command implementation."""

import math

import click

from cli.core.reports import write_csv, write_summary
from cli.options import (
    RunContext,
    cutoffs_option,
    exit_with_error,
    finish,
    p_option,
    resolved_config,
    tau_option,
)
from engine.matrix_measures import default_variant, laminate_ratio_table, ratio_error_constant
from shared.types import Params

COLUMNS = ["N", "log_N", "ratio", "c_B", "error_log_N", "bound", "within"]


def error_bound(c_B: float, log_N: float) -> float:
    """Allowed |ratio - c_B| at level N: 10 (1 + c_B) / log N."""
    return 10.0 * (1.0 + c_B) / log_N


@click.command("laminate-ratio")
@p_option()
@tau_option()
@cutoffs_option(("e^10", "e^20", "e^40"))
@click.option(
    "--variant",
    type=click.Choice(["standard", "flipped"]),
    default=None,
    help="Laminate family [default: standard for p <= 2, flipped otherwise]",
)
@click.pass_obj
def laminate_ratio(run: RunContext, p, tau, cutoffs, variant):
    """
    Tabulate ratio(nu_N) against c_B over a sweep of N.

    Passes when every row lies within 10 (1 + c_B) / log N of c_B.
    """
    try:
        params = Params(p=p, tau=tau)
        variant = variant or default_variant(params)
        table = laminate_ratio_table(params, sorted(cutoffs), variant)
        rows = []
        for row in table:
            bound = error_bound(row.c_B, row.log_N)
            within = abs(row.ratio - row.c_B) <= bound
            rows.append([row.N, row.log_N, row.ratio, row.c_B, row.error_log_N, bound, within])
            click.echo(
                f"N=e^{row.log_N:g}: ratio={row.ratio:.10g} c_B={row.c_B:.10g} "
                f"|error|*log N={row.error_log_N:.4g} {'ok' if within else 'outside bound'}"
            )
        passed = all(r[-1] for r in rows)
        config = resolved_config(run)
        table_path = write_csv(run.out, "laminate-ratio", config, COLUMNS, rows)
        constant = ratio_error_constant(params, variant)
        write_summary(
            run.out,
            "laminate-ratio",
            config,
            passed,
            {
                "variant": variant,
                "c_B": params.c_B,
                "error_constant": constant,
                "rows": [r.model_dump() for r in table],
            },
            [table_path],
        )
        if math.isfinite(constant):
            click.echo(f"(ratio - c_B) * log N -> {constant:.6g}")
    except Exception as e:
        exit_with_error(e)
    finish(passed)
