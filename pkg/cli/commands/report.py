"""Report command implementation."""

import click

from cli.core.reports import REPORT_COLUMNS, collect_summaries, summary_rows, write_csv
from cli.options import RunContext, exit_with_error, finish, resolved_config
from shared.config import get_reports_dir


@click.command()
@click.pass_obj
def report(run: RunContext):
    """
    Collect every run summary under --out into one long-format CSV table.

    Passes when every collected run passed.
    """
    try:
        summaries = collect_summaries(get_reports_dir(run.out))
        rows = summary_rows(summaries)
        config = resolved_config(run)
        config["runs"] = sorted(s.digest for s in summaries)
        path = write_csv(run.out, "report", config, REPORT_COLUMNS, rows)
        failed = [s for s in summaries if not s.passed]
        click.echo(f"{len(summaries)} runs, {len(failed)} failed")
        for s in failed:
            click.echo(f"failed: {s.command} {s.digest[:12]}")
        click.echo(f"report: {path}")
        passed = not failed
    except Exception as e:
        exit_with_error(e)
    finish(passed)
