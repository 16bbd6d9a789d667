"""Martingale command implementation."""

import math

import click
import numpy as np

from cli.core.reports import field_path, write_csv, write_summary, write_terminals
from cli.options import (
    RunContext,
    exit_with_error,
    finish,
    p_option,
    resolved_config,
    seed_option,
    tau_option,
)
from engine.martingale import (
    binned_conditional_expectation,
    conditional_pairing,
    empirical_inequality,
    expected_v_nonpositive,
    simulate_paths,
    uniform_start_grid,
    verify_subordination,
)
from shared.config import get_seed
from shared.types import Params, SimConfig, SpectralField

CHECK_COLUMNS = [
    "check",
    "estimate",
    "reference",
    "standard_error",
    "asserted",
    "passed",
]
BIN_COLUMNS = [
    "center_1",
    "center_2",
    "count",
    "x_real",
    "x_imag",
    "y_real",
    "y_imag",
]

# Quadratic variations must agree to this share of their size.
QV_TOL = 1e-10


def gaussian_field(n: int, sigma: float) -> SpectralField:
    """exp(-|z - (pi, pi)|^2 / (2 sigma^2)) on the periodic cell [0, 2 pi)^2."""
    if not sigma > 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma!r}")
    x = np.arange(n) * (2.0 * math.pi / n)
    r2 = (x[:, None] - math.pi) ** 2 + (x[None, :] - math.pi) ** 2
    return SpectralField(values=np.exp(-r2 / (2.0 * sigma * sigma)))


@click.command()
@p_option()
@tau_option()
@click.option("--grid", type=int, default=64, show_default=True, help="Field grid size")
@click.option(
    "--sigma",
    type=float,
    default=0.4,
    show_default=True,
    help="Width of the Gaussian field",
)
@click.option(
    "--T", "horizon", type=float, default=0.1, show_default=True, help="Horizon"
)
@click.option("--dt", type=float, default=0.001, show_default=True, help="Time step")
@click.option("--paths", type=int, default=10000, show_default=True)
@click.option(
    "--start-k", type=int, default=16, show_default=True, help="Start grid is k x k"
)
@click.option(
    "--radius",
    type=float,
    default=0.8,
    show_default=True,
    help="Half-side of the start square around the field center",
)
@click.option("--ladder-levels", type=int, default=128, show_default=True)
@click.option("--bins", type=int, default=16, show_default=True)
@click.option(
    "--pairing/--no-pairing",
    default=False,
    show_default=True,
    help="Also assert the weak-form conditional expectations",
)
@click.option("--psi-sigma", type=float, default=0.3, show_default=True)
@seed_option()
@click.pass_obj
def martingale(
    run: RunContext,
    p,
    tau,
    grid,
    sigma,
    horizon,
    dt,
    paths,
    start_k,
    radius,
    ladder_levels,
    bins,
    pairing,
    psi_sigma,
    seed,
):
    """
    Simulate heat martingales of a Gaussian field and their transform.

    Asserts equal quadratic variations, the Burkholder-type inequality
    and E v(X, Y) <= 0 within three standard errors; at p = 2, tau = 0 the
    isometry is asserted as an equality. Writes the checks and the binned
    conditional expectations as CSV and the terminals as .npz.
    """
    try:
        params = Params(p=p, tau=tau)
        phi = gaussian_field(grid, sigma)
        cfg = SimConfig(
            T=horizon,
            dt=dt,
            n_paths=paths,
            seed=get_seed() if seed is None else seed,
            ladder_levels=ladder_levels,
            **uniform_start_grid((math.pi, math.pi), start_k, radius),
        )
        terminals = simulate_paths(phi, cfg, threads=run.threads)

        rows = []
        qv_gap = verify_subordination(terminals)
        qv_scale = max(1.0, float(np.max(terminals.qvX)))
        qv_limit = QV_TOL * qv_scale
        rows.append(["qv_gap", qv_gap, qv_limit, None, True, qv_gap <= qv_limit])

        inequality = empirical_inequality(terminals, params)
        rows.append(
            [
                "inequality",
                inequality.lhs,
                inequality.rhs,
                inequality.standard_error,
                inequality.asserted,
                inequality.holds,
            ]
        )
        if params.p == 2.0 and params.tau == 0.0:
            gap = abs(inequality.lhs - inequality.rhs)
            rows.append(
                [
                    "isometry",
                    inequality.lhs,
                    inequality.rhs,
                    inequality.standard_error,
                    True,
                    gap <= 3.0 * inequality.standard_error,
                ]
            )
        v_mean = expected_v_nonpositive(terminals, params)
        rows.append(
            [
                "v_mean",
                v_mean.mean,
                0.0,
                v_mean.standard_error,
                v_mean.asserted,
                v_mean.holds,
            ]
        )
        if pairing:
            psi = gaussian_field(grid, psi_sigma)
            report = conditional_pairing(terminals, phi, horizon, psi)
            for name, estimate, oracle, se, within in (
                ("pairing_x", report.estimate_x, report.oracle_x, report.se_x, report.within_x),
                ("pairing_y", report.estimate_y, report.oracle_y, report.se_y, report.within_y),
            ):
                rows.append([name, estimate, oracle, se, True, within])
        passed = all(r[-1] for r in rows if r[4])

        binned = binned_conditional_expectation(terminals, bins, phi.half_period)
        bin_rows = [
            [
                binned.centers[i],
                binned.centers[j],
                int(binned.counts[i, j]),
                binned.mean_x[i, j, 0],
                binned.mean_x[i, j, 1],
                binned.mean_y[i, j, 0],
                binned.mean_y[i, j, 1],
            ]
            for i in range(bins)
            for j in range(bins)
        ]

        config = resolved_config(run)
        checks_path = write_csv(run.out, "martingale", config, CHECK_COLUMNS, rows)
        bins_path = write_csv(
            run.out, "martingale", config, BIN_COLUMNS, bin_rows, suffix="-bins"
        )
        dump_path = field_path(run.out, "martingale", config, "npz")
        dump = write_terminals(dump_path, terminals)
        write_summary(
            run.out,
            "martingale",
            config,
            passed,
            {
                "paths": terminals.n_paths,
                "escaped": terminals.n_paths - terminals.survivors,
                "qv_gap": qv_gap,
                "inequality": inequality.model_dump(),
                "v_mean": v_mean.model_dump(),
                "empty_bins": binned.empty_bins,
                "sparse_bins": binned.sparse_bins,
            },
            [checks_path, bins_path, dump],
        )
        for row in rows:
            tag = ("pass" if row[-1] else "FAIL") if row[4] else "report only"
            click.echo(f"{row[0]}: {row[1]:.6g} vs {row[2]:.6g} ({tag})")
    except Exception as e:
        exit_with_error(e)
    finish(passed)
