"""Biconvex-check command implementation."""

import click
import numpy as np

from cli.core.reports import write_csv, write_summary
from cli.options import (
    RunContext,
    cutoffs_option,
    exit_with_error,
    finish,
    resolved_config,
    seed_option,
    tol_option,
)
from engine.matrix_measures import Integrand, verify_biconvex_inequality

COLUMNS = ["f", "k", "N", "lhs", "rhs", "slack", "mode", "passed"]

# name -> (integrand, equality expected)
INTEGRANDS = {
    "xy": (Integrand.of_plane(lambda x, y: x * y, degree=2.0, name="xy"), True),
    "x2": (Integrand.of_plane(lambda x, y: x * x, degree=2.0, name="x2"), False),
    "exp-sum": (
        Integrand.of_plane(lambda x, y: np.exp(1e-3 * (x + y)), name="exp-sum"),
        False,
    ),
}


@click.command("biconvex-check")
@click.option(
    "--k",
    "ks",
    type=float,
    multiple=True,
    default=(0.1, 0.5, 0.9),
    show_default=True,
    help="Laminate slopes in (-1, 1)",
)
@cutoffs_option(("10", "1000"))
@click.option(
    "--f",
    "names",
    type=click.Choice(sorted(INTEGRANDS)),
    multiple=True,
    default=("xy", "x2"),
    show_default=True,
    help="Test functions of the diagonal entries",
)
@tol_option(1e-9)
@seed_option()
@click.pass_obj
def biconvex_check(run: RunContext, ks, cutoffs, names, tol, seed):
    """
    Check f(1, 1) <= the laminate integral of f for biconvex f.

    A biaffine f (xy) must give equality within --tol; the others must
    give a slack of at least -tol.
    """
    try:
        rows = []
        for name in names:
            f, equality = INTEGRANDS[name]
            for k in ks:
                for N in cutoffs:
                    report = verify_biconvex_inequality(k, N, f, seed=seed)
                    ok = (
                        abs(report.slack) <= tol if equality else report.slack >= -tol
                    )
                    rows.append(
                        [name, k, N, report.lhs, report.rhs, report.slack, report.mode, ok]
                    )
                    click.echo(
                        f"{name} k={k:g} N={N:g}: lhs={report.lhs:.10g} "
                        f"rhs={report.rhs:.10g} slack={report.slack:.3e}"
                    )
        passed = all(r[-1] for r in rows)
        config = resolved_config(run)
        table_path = write_csv(run.out, "biconvex-check", config, COLUMNS, rows)
        results = {"checks": len(rows), "failed": sum(not r[-1] for r in rows)}
        write_summary(run.out, "biconvex-check", config, passed, results, [table_path])
    except Exception as e:
        exit_with_error(e)
    finish(passed)
