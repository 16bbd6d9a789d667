"""Riesz-check command implementation."""

from pathlib import Path
from typing import Any

import click
import numpy as np

from cli.core.reports import write_csv, write_summary
from cli.options import (
    RunContext,
    exit_with_error,
    finish,
    p_option,
    resolved_config,
    seed_option,
    tau_option,
    tol_option,
)
from engine.spectral import (
    cross_check_identity,
    laplacian_source,
    norm_ratio_report,
    riesz_square,
    zero_padded,
)
from shared.config import get_seed
from shared.grid_io import read_grid
from shared.types import Params, SpectralField

COLUMNS = [
    "sample",
    "ratio",
    "ratio_phi",
    "denominator_gap",
    "guard_frame_energy",
    "identity_error",
]


def random_fields(seed: int, n: int, count: int) -> list[SpectralField]:
    """Zero-mean Gaussian white noise fields on an n x n periodic grid."""
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(count):
        values = rng.normal(size=(n, n))
        fields.append(SpectralField(values=values - values.mean()))
    return fields


def identity_error(phi: SpectralField) -> float:
    """max |(R1^2 + R2^2) phi + phi| over max |phi|, phi centered first."""
    centered = phi.values - phi.values.mean()
    total = riesz_square(phi, 1).values + riesz_square(phi, 2).values
    scale = float(np.max(np.abs(centered)))
    return float(np.max(np.abs(total + centered))) / scale if scale > 0.0 else 0.0


@click.command("riesz-check")
@p_option()
@tau_option()
@click.option(
    "--field",
    "field_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="GRID2D function u; its Laplacian is the source field",
)
@click.option(
    "--kind",
    type=click.Choice(["difference", "mixed"]),
    default="difference",
    show_default=True,
    help="R1^2 - R2^2 or its rotation 2 R1 R2",
)
@click.option("--grid", type=int, default=64, show_default=True, help="Random field size")
@click.option(
    "--samples", type=int, default=100, show_default=True, help="Random fields to test"
)
@seed_option()
@tol_option(1e-10)
@click.pass_obj
def riesz_check(run: RunContext, p, tau, field_file, kind, grid, samples, seed, tol):
    """
    Compare spectral norm ratios with ((p*-1)^2 + tau^2)^(1/2).

    Without --field, tests random zero-mean fields; with --field, tests the
    Laplacian of a realized function and reports the Fourier against
    finite-difference gap. Passes when no ratio exceeds the target by more
    than --tol relative, for (p, tau) in T.
    """
    try:
        params = Params(p=p, tau=tau)
        target = params.operator_norm_target
        results: dict[str, Any] = {"target": target, "in_T": params.in_T, "kind": kind}
        if field_file is not None:
            u = zero_padded(read_grid(field_file))
            results["cross_check"] = cross_check_identity(u)
            fields = [laplacian_source(u)]
        else:
            if samples < 1:
                raise ValueError(f"samples must be at least 1, got {samples}")
            fields = random_fields(get_seed() if seed is None else seed, grid, samples)

        rows = []
        for i, phi in enumerate(fields):
            report = norm_ratio_report(params, phi, kind)
            rows.append(
                [
                    i,
                    report.ratio,
                    report.ratio_phi,
                    report.denominator_gap,
                    report.guard_frame_energy,
                    identity_error(phi),
                ]
            )
        worst = max(r[1] for r in rows)
        results["max_ratio"] = worst
        results["max_identity_error"] = max(r[-1] for r in rows)
        passed = worst <= target * (1.0 + tol) or not params.in_T

        config = resolved_config(run)
        table_path = write_csv(run.out, "riesz-check", config, COLUMNS, rows)
        write_summary(run.out, "riesz-check", config, passed, results, [table_path])
        click.echo(f"target: {target:.10g}")
        click.echo(f"max ratio over {len(rows)} fields: {worst:.10g}")
        click.echo(f"max identity error: {results['max_identity_error']:.3e}")
        if "cross_check" in results:
            click.echo(f"Fourier vs finite-difference gap: {results['cross_check']:.3e}")
        if not params.in_T:
            click.echo("(p, tau) is outside T: exploratory, not asserted")
    except Exception as e:
        exit_with_error(e)
    finish(passed)
