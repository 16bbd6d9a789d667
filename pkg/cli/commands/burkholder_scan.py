"""Burkholder-scan command implementation."""

import click

from cli.core.reports import write_csv, write_summary
from cli.options import (
    RunContext,
    exit_with_error,
    finish,
    p_option,
    resolved_config,
    tau_option,
)
from engine.burkholder import (
    scan_zigzag_concavity,
    verify_majorant,
    zigzag_threshold_search,
)
from shared.types import Params

COLUMNS = ["check", "value", "threshold", "y1", "y2", "asserted", "passed"]
THRESHOLD_COLUMNS = ["tau", "worst", "first_violation"]


@click.command("burkholder-scan")
@p_option(3.0)
@tau_option(0.5)
@click.option(
    "--box", type=float, default=2.0, show_default=True, help="Scan half-width"
)
@click.option(
    "--grid", type=int, default=256, show_default=True, help="Scan points per side"
)
@click.option(
    "--h", "step", type=float, default=1e-3, show_default=True, help="Difference step"
)
@click.option("--majorant-box", type=float, default=3.0, show_default=True)
@click.option("--majorant-grid", type=int, default=512, show_default=True)
@click.option(
    "--taus",
    type=float,
    multiple=True,
    default=(),
    help="tau values for an exploratory threshold search at this p",
)
@click.pass_obj
def burkholder_scan(
    run: RunContext, p, tau, box, grid, step, majorant_box, majorant_grid, taus
):
    """
    Scan the zigzag concavity of U and check the majorant U >= v.

    Outside T the results are reported as exploratory and never fail the
    run. With --taus, also reports the smallest tau whose scan fails.
    """
    try:
        params = Params(p=p, tau=tau)
        scan = scan_zigzag_concavity(params, box=box, n=grid, h=step)
        majorant = verify_majorant(params, box=majorant_box, n=majorant_grid)
        rows = [
            [
                "zigzag",
                scan.worst,
                scan.threshold,
                scan.worst_at[0],
                scan.worst_at[1],
                scan.asserted,
                scan.passed,
            ],
            [
                "majorant",
                majorant.min_gap,
                0.0,
                majorant.min_gap_at[0],
                majorant.min_gap_at[1],
                params.in_T,
                majorant.passed,
            ],
        ]
        passed = all(r[-1] for r in rows if r[5])

        config = resolved_config(run)
        artifacts = [write_csv(run.out, "burkholder-scan", config, COLUMNS, rows)]
        results = {
            "in_T": params.in_T,
            "zigzag": scan.model_dump(exclude={"params"}),
            "majorant": majorant.model_dump(exclude={"params"}),
        }
        if taus:
            search = zigzag_threshold_search(
                p, list(taus), box=box, n=min(grid, 128), h=step
            )
            threshold_rows = [
                [t, w, t == search.first_violation]
                for t, w in zip(search.taus, search.worst, strict=True)
            ]
            artifacts.append(
                write_csv(
                    run.out,
                    "burkholder-scan",
                    config,
                    THRESHOLD_COLUMNS,
                    threshold_rows,
                    suffix="-threshold",
                )
            )
            results["first_violation"] = search.first_violation
        write_summary(run.out, "burkholder-scan", config, passed, results, artifacts)

        label = "" if params.in_T else " (exploratory: outside T)"
        verdict = "ok" if scan.passed else "violated"
        click.echo(
            f"zigzag worst second difference {scan.worst:.3e} at {scan.worst_at}, "
            f"threshold {scan.threshold:.3e}: {verdict}{label}"
        )
        click.echo(
            f"majorant min gap {majorant.min_gap:.3e} at {majorant.min_gap_at}: "
            f"{'ok' if majorant.passed else 'violated'}{label}"
        )
        if taus:
            click.echo(f"first violating tau: {results['first_violation']}")
    except Exception as e:
        exit_with_error(e)
    finish(passed)
