"""Realize command implementation."""

from pathlib import Path

import click

from cli.core.reports import field_path, write_csv, write_summary
from cli.options import (
    RunContext,
    cutoff_option,
    exit_with_error,
    finish,
    p_option,
    resolved_config,
    tau_option,
)
from engine.realization import (
    compare_distribution,
    default_radius,
    hessian,
    pushforward_moments,
    realize_with_report,
)
from engine.staircase import example_prelaminate, from_document, nu_prelaminate
from shared.grid_io import write_grid
from shared.types import Params, PrelaminateTree

COLUMNS = ["a11", "a12", "a22", "target_weight", "fraction", "error"]


def load_tree(
    source: str, tree_file: Path | None, params: Params, N: float, M: int
) -> PrelaminateTree:
    """The prelaminate to realize: a document, the example tree, or nu_N."""
    if tree_file is not None:
        return from_document(Path(tree_file).read_text())
    if source == "example":
        return example_prelaminate()
    return nu_prelaminate(params, N, M)


@click.command()
@click.option(
    "--source",
    type=click.Choice(["example", "nu"]),
    default="example",
    show_default=True,
    help="Built-in tree: the three-atom example or the nu_N recipe",
)
@click.option(
    "--tree",
    "tree_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Tree document written by the staircase command (overrides --source)",
)
@p_option()
@tau_option()
@cutoff_option("e^4")
@click.option(
    "--M", "steps", type=int, default=16, show_default=True, help="Stages of nu_N"
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
@click.option(
    "--delta", type=float, default=None, help="Budget for max|u| + max|grad u|"
)
@click.option("--layer-fraction", type=float, default=0.2, show_default=True)
@click.option("--period-fraction", type=float, default=0.2, show_default=True)
@click.option("--mollify/--no-mollify", default=False, show_default=True)
@click.option(
    "--prune/--strict",
    default=False,
    show_default=True,
    help="Keep unresolvable splits as leaves instead of failing",
)
@click.option("--fraction-tol", type=float, default=0.05, show_default=True)
@click.option("--exceptional-tol", type=float, default=0.1, show_default=True)
@click.pass_obj
def realize(
    run: RunContext,
    source,
    tree_file,
    p,
    tau,
    cutoff,
    steps,
    grid,
    radius,
    delta,
    layer_fraction,
    period_fraction,
    mollify,
    prune,
    fraction_tol,
    exceptional_tol,
):
    """
    Realize a prelaminate as the Hessian distribution of a grid function.

    Writes the function as a GRID2D binary and the per-atom area fractions
    as CSV. Passes when every fraction is within --fraction-tol of its
    weight and the exceptional area is at most --exceptional-tol.
    """
    try:
        params = Params(p=p, tau=tau)
        tree = load_tree(source, tree_file, params, cutoff, steps)
        r = default_radius(tree) if radius is None else radius
        u, report = realize_with_report(
            tree,
            grid,
            r,
            delta,
            layer_fraction,
            period_fraction,
            mollify=mollify,
            on_unresolved="prune" if prune else "error",
        )
        hs = hessian(u)
        dist = compare_distribution(hs, report.target, r, params)
        moments = pushforward_moments(hs, params)

        rows = [
            [
                a.matrix.a11,
                a.matrix.a12,
                a.matrix.a22,
                a.target_weight,
                a.fraction,
                a.fraction - a.target_weight,
            ]
            for a in dist.atoms
        ]
        worst = dist.worst_fraction_error()
        passed = worst <= fraction_tol and dist.exceptional <= exceptional_tol

        config = resolved_config(run)
        grid_path = write_grid(u, field_path(run.out, "realize", config, "grid2d"))
        table_path = write_csv(run.out, "realize", config, COLUMNS, rows)
        write_summary(
            run.out,
            "realize",
            config,
            passed,
            {
                "r": r,
                "blocks": report.blocks,
                "pruned_mass": report.pruned_mass,
                "c1_norm": report.c1_norm,
                "worst_fraction_error": worst,
                "exceptional": dist.exceptional,
                "pushforward_ratio": moments.ratio,
                "moments": [m.model_dump() for m in dist.moments],
            },
            [grid_path, table_path],
        )
        click.echo(f"blocks: {report.blocks}, pruned mass: {report.pruned_mass:.4g}")
        click.echo(f"worst fraction error: {worst:.4g}")
        click.echo(f"exceptional area: {dist.exceptional:.4g}")
        click.echo(f"pushforward ratio: {moments.ratio:.6g}")
        click.echo(f"field: {grid_path}")
    except Exception as e:
        exit_with_error(e)
    finish(passed)
