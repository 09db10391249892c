"""afmass CLI

Mass functionals of asymptotically flat metrics from the command line.
Every subcommand reads a JSON run configuration and writes a JSON report
and CSV tables to the output directory:
  - adm-mass: ADM mass extrapolated from coordinate-sphere fluxes.
  - fg-profile: F_g on coordinate spheres and its limit.
  - weighted-mass: divergence-form mass and the mass - matter defect.
  - sequence: semicontinuity experiments on built-in sequences.
  - cone-angle: cone mass 1 - alpha of a conical surface.
  - cone-sequence: semicontinuity experiments on conical surfaces.
"""

from typing import Any, Dict, Optional

import rich_click as click
from rich.console import Console
from rich.table import Table

from afmass import __version__, core
from afmass.errors import ConfigInvalid
from afmass.utils.report import read_csv

click.rich_click.USE_RICH_MARKUP = True
click.rich_click.USE_MARKDOWN = True
click.rich_click.SHOW_ARGUMENTS = True
click.rich_click.GROUP_ARGUMENTS_OPTIONS = True
click.rich_click.SHOW_METAVARS_COLUMN = False
click.rich_click.APPEND_METAVARS_HELP = True

Overrides = Dict[str, Any]


def run_options(func):
    """Options shared by every subcommand."""
    options = [
        click.option(
            "--config",
            "config_path",
            type=click.Path(exists=True, dir_okay=False),
            required=True,
            help="JSON run configuration.",
        ),
        click.option("--out", default=None, help="Output directory."),
        click.option(
            "--quadrature",
            type=click.INT,
            default=None,
            help="Nodes per angle on coordinate spheres.",
        ),
        click.option(
            "--threads",
            type=click.INT,
            default=None,
            envvar="AFMASS_THREADS",
            help="Worker threads for per-radius work.",
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _table(title: str, columns, rows) -> Table:
    table = Table(title=title)
    for column in columns:
        table.add_column(str(column), style="cyan")
    for row in rows:
        table.add_row(*[_fmt(value) for value in row])
    return table


def _summary(result: Dict[str, Any]) -> Table:
    table = Table(title="Summary")
    table.add_column("Field", style="cyan")
    table.add_column("Value", style="magenta")
    for key, value in result.items():
        if not isinstance(value, (dict, list)):
            table.add_row(key, _fmt(value))
    return table


def show(outcome: core.RunResult) -> None:
    """Prints the result tables of a run."""
    console = Console()
    report = outcome.report
    if "error" in report:
        error = report["error"]
        console.print(
            f"[red]{report['command']} failed[/red]: "
            f"{error['type']}: {error['message']}"
        )
        return

    result = report["result"]
    if report["command"] == "fg-profile":
        if result.get("limit"):
            console.print(_summary(result["limit"]))
    elif report["command"] == "weighted-mass":
        console.print(_summary({**result, "mass": result["mass"]["value"]}))
        console.print(_summary(result["divergence"]))
    else:
        console.print(_summary(result))

    for path in outcome.csv_paths:
        rows = read_csv(path)
        columns = list(rows[0]) if rows else []
        console.print(_table(path, columns, [row.values() for row in rows]))
    console.print(f"report written to {outcome.json_path}")


def _execute(
    ctx, config_path: str, command: Optional[str], **overrides: Overrides
) -> None:
    try:
        config = core.load_config(config_path, command=command, **overrides)
    except ConfigInvalid as e:
        Console(stderr=True).print(f"[red]invalid configuration[/red]: {e}")
        ctx.exit(2)
    outcome = core.run(config)
    show(outcome)
    ctx.exit(outcome.exit_code)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """afmass: mass functionals of asymptotically flat metrics

    Each subcommand takes a JSON configuration with --config and writes
    `<command>.json` and `<command>.csv` into --out.
    """


@main.command(name="adm-mass")
@run_options
@click.pass_context
def adm_mass(ctx, config_path: str, **overrides: Overrides) -> None:
    """ADM mass of the configured metric.

    The normalized flux through coordinate spheres at the configured radii
    is extrapolated to infinity.

    Args:
        config_path (str): JSON file with a `spec` and optional `radii`.
    """
    _execute(ctx, config_path, "adm-mass", **overrides)


@main.command(name="fg-profile")
@run_options
@click.pass_context
def fg_profile(ctx, config_path: str, **overrides: Overrides) -> None:
    """F_g on coordinate spheres, with its limit on asymptotically
    Schwarzschild metrics.

    Args:
        config_path (str): JSON file with a `spec` and optional `radii`.
    """
    _execute(ctx, config_path, "fg-profile", **overrides)


@main.command(name="weighted-mass")
@run_options
@click.pass_context
def weighted_mass(ctx, config_path: str, **overrides: Overrides) -> None:
    """Divergence-form mass, matter integral and their defect.

    Args:
        config_path (str): JSON file with a `spec` and optional
            `outer_radius`.
    """
    _execute(ctx, config_path, "weighted-mass", **overrides)


@main.command()
@run_options
@click.pass_context
def sequence(ctx, config_path: str, **overrides: Overrides) -> None:
    """Semicontinuity experiment on a built-in sequence.

    Kinds: blow_up, escaping, shells, constant.

    Args:
        config_path (str): JSON file with an `experiment` block.
    """
    _execute(ctx, config_path, "sequence", **overrides)


@main.command(name="cone-angle")
@run_options
@click.pass_context
def cone_angle(ctx, config_path: str, **overrides: Overrides) -> None:
    """Cone mass 1 - alpha of an asymptotically conical surface.

    Args:
        config_path (str): JSON file with a `surface` block.
    """
    _execute(ctx, config_path, "cone-angle", **overrides)


@main.command(name="cone-sequence")
@run_options
@click.pass_context
def cone_sequence(ctx, config_path: str, **overrides: Overrides) -> None:
    """Semicontinuity experiment on conical surfaces.

    Kinds: blow_up, escaping, constant.

    Args:
        config_path (str): JSON file with an `experiment` block.
    """
    _execute(ctx, config_path, "cone-sequence", **overrides)


@main.command()
@run_options
@click.pass_context
def run(ctx, config_path: str, **overrides: Overrides) -> None:
    """Runs the command named in the configuration file.

    Args:
        config_path (str): JSON file with a `command` field.
    """
    _execute(ctx, config_path, None, **overrides)
