"""Staircase command implementation."""

import click

from cli.core.reports import atomic_write, run_stem, write_csv, write_summary
from cli.options import (
    RunContext,
    cutoff_option,
    exit_with_error,
    finish,
    p_option,
    resolved_config,
    tau_option,
)
from engine.matrix_measures import default_variant
from engine.staircase import build_staircase, moment_errors, support_box_check, to_document
from shared.config import get_documents_dir
from shared.types import Params

COLUMNS = ["integrand", "M", "error", "halving_ratio"]

# error(M) / error(2M) expected of the phi moments
MIN_HALVING = 1.4


@click.command()
@p_option(4.0)
@tau_option()
@cutoff_option("e^4")
@click.option(
    "--M",
    "steps",
    type=int,
    multiple=True,
    default=(64, 128, 256),
    show_default=True,
    help="Staircase stages; repeat for a refinement sweep",
)
@click.pass_obj
def staircase(run: RunContext, p, tau, cutoff, steps):
    """
    Build the staircase prelaminate and measure its convergence.

    Writes the tree of the finest M as a document, tabulates the moment
    errors against the continuous laminate, and passes when the support
    stays inside the box and each doubling of M shrinks the phi errors by
    at least 1.4.
    """
    try:
        params = Params(p=p, tau=tau)
        Ms = sorted(set(steps))
        variant = default_variant(params)
        finest = build_staircase(params, cutoff, Ms[-1], variant)
        support = support_box_check(finest, params, cutoff, variant)
        report = moment_errors(params, cutoff, Ms, variant=variant)

        rows = []
        for name, errors in report.errors.items():
            ratios = report.halving_ratios[name]
            for i, (M, error) in enumerate(zip(Ms, errors, strict=True)):
                rows.append([name, M, error, ratios[i] if i < len(ratios) else None])
        halving_ok = all(
            r >= MIN_HALVING
            for name in ("phi1", "phi2")
            for r in report.halving_ratios.get(name, [])
        )
        passed = support.inside and halving_ok

        config = resolved_config(run)
        document = get_documents_dir(run.out) / f"{run_stem('staircase', config)}.json"
        atomic_write(document, to_document(finest, params).encode("utf-8"))
        table_path = write_csv(run.out, "staircase", config, COLUMNS, rows)
        write_summary(
            run.out,
            "staircase",
            config,
            passed,
            {
                "variant": variant,
                "atoms": 2 * Ms[-1] + 1,
                "support": support.model_dump(),
                "errors": report.errors,
                "halving_ratios": report.halving_ratios,
            },
            [table_path, document],
        )
        click.echo(f"variant: {variant}")
        click.echo(
            f"support inside [{support.lo:.4g}, {support.hi:.4g}]: {support.inside}"
        )
        for name, ratios in report.halving_ratios.items():
            shown = ", ".join(f"{r:.3g}" for r in ratios)
            click.echo(f"{name} halving ratios: {shown}")
        click.echo(f"tree document: {document}")
    except Exception as e:
        exit_with_error(e)
    finish(passed)
