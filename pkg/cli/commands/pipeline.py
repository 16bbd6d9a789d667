"""Pipeline command implementation."""

import click

from cli.core.pipeline import run_pipeline
from cli.core.reports import atomic_write, field_path, run_stem, write_summary
from cli.options import (
    RunContext,
    cutoff_option,
    exit_with_error,
    finish,
    p_option,
    resolved_config,
    tau_option,
)
from shared.config import get_documents_dir
from shared.grid_io import write_grid
from shared.types import Params


@click.command()
@p_option()
@tau_option()
@cutoff_option("e^4")
@click.option(
    "--M", "steps", type=int, default=16, show_default=True, help="Staircase stages"
)
@click.option(
    "--grid", type=int, default=1024, show_default=True, help="Grid points per axis"
)
@click.option(
    "--r",
    "radius",
    type=float,
    default=None,
    help="Ball radius [default: from the leaf separation]",
)
@click.option("--layer-fraction", type=float, default=0.2, show_default=True)
@click.option(
    "--spectral/--no-spectral",
    default=True,
    show_default=True,
    help="Run the Fourier cross-check and the spectral ratio",
)
@click.pass_obj
def pipeline(
    run: RunContext, p, tau, cutoff, steps, grid, radius, layer_fraction, spectral
):
    """
    Certify a lower bound through staircase, realization and spectral stages.

    Writes the certificate document and the realized field. Passes when
    the realized ratio lies within the sandwich budget of the measure-level
    ratio of the realized target and reaches 80% of ratio(nu_N).
    """
    try:
        params = Params(p=p, tau=tau)
        certificate, u = run_pipeline(
            params, cutoff, steps, grid, radius, layer_fraction, spectral
        )
        passed = certificate.passed

        config = resolved_config(run)
        stem = run_stem("pipeline", config)
        document = get_documents_dir(run.out) / f"{stem}.certificate.json"
        atomic_write(document, certificate.model_dump_json(indent=2).encode("utf-8"))
        grid_path = write_grid(u, field_path(run.out, "pipeline", config, "grid2d"))
        sandwich = certificate.sandwich
        write_summary(
            run.out,
            "pipeline",
            config,
            passed,
            {
                "c_B": certificate.c_B,
                "measure_ratio_nu": certificate.measure_ratio_nu,
                "realized_ratio": sandwich.realized_ratio,
                "measure_ratio": sandwich.measure_ratio,
                "budget": sandwich.budget,
                "exceptional": sandwich.exceptional,
                "achieved_share": certificate.achieved_share,
                "cross_check": certificate.cross_check,
                "spectral_ratio_p": certificate.spectral_ratio_p,
            },
            [document, grid_path],
        )
        click.echo(f"target c_B: {certificate.c_B:.6g}")
        click.echo(f"ratio(nu_N): {certificate.measure_ratio_nu:.6g}")
        click.echo(
            f"realized ratio: {sandwich.realized_ratio:.6g} "
            f"({certificate.achieved_share:.1%} of ratio(nu_N))"
        )
        click.echo(
            f"target measure ratio: {sandwich.measure_ratio:.6g} "
            f"+/- {sandwich.budget:.3g}"
        )
        if certificate.cross_check is not None:
            click.echo(f"Fourier vs finite-difference gap: {certificate.cross_check:.3e}")
        if certificate.spectral_ratio_p is not None:
            click.echo(f"spectral ratio^p: {certificate.spectral_ratio_p:.6g}")
        for caveat in certificate.caveats:
            click.echo(f"caveat: {caveat}")
        click.echo(f"certificate: {document}")
    except Exception as e:
        exit_with_error(e)
    finish(passed)
