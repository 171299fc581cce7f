"""Command line interface: ``pole-decoherence poles|evolve|timescales|basis|verify``."""

from __future__ import annotations

import functools
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Optional

import click

from pole_decoherence import artifacts, pipeline
from pole_decoherence.scenario import load_scenario
from pole_decoherence.utils.exceptions import ScenarioError, VerificationFailedError
from pole_decoherence.verification import list_criteria, run_verify

if TYPE_CHECKING:
    from pole_decoherence.pipeline import RunReport

logger = logging.getLogger(__name__)

EXIT_INTERNAL_ERROR = 1
EXIT_INVALID_SCENARIO = 2
EXIT_VERIFICATION_FAILED = 3

_scenario_option = click.option(
    "--scenario",
    "scenario_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Scenario TOML file; the packaged default scenario when omitted.",
)
_out_option = click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("out"),
    show_default=True,
    help="Directory receiving the artifacts.",
)


def _exit_codes(command: Callable[..., None]) -> Callable[..., None]:
    """Map scenario, verification and internal errors to the documented exit codes."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> None:  # noqa: ANN401
        try:
            command(*args, **kwargs)
        except ScenarioError as ex:
            click.echo(f"Invalid scenario: {ex}", err=True)
            raise SystemExit(EXIT_INVALID_SCENARIO) from ex
        except VerificationFailedError as ex:
            click.echo(str(ex), err=True)
            raise SystemExit(EXIT_VERIFICATION_FAILED) from ex
        except (click.ClickException, click.exceptions.Exit, SystemExit):
            raise
        except Exception as ex:
            logger.exception("internal error")
            click.echo(f"Internal error: {type(ex).__name__}: {ex}", err=True)
            raise SystemExit(EXIT_INTERNAL_ERROR) from ex

    return wrapper


def _summarize(ctx: click.Context, report: RunReport) -> None:
    if ctx.obj["quiet"]:
        return
    pole = report.pole
    click.echo(f"z0 = {pole.omega_prime:.12g} - {pole.gamma / 2:.12g}i")
    for name, path in report.artifacts.items():
        click.echo(f"{name}: {path}")
    for warning in report.warnings:
        click.echo(f"warning: {warning}")


@click.group()
@click.option("--quiet", "-q", is_flag=True, help="Only log warnings and errors.")
@click.option("--verbose", "-v", is_flag=True, help="Log numerical details.")
@click.pass_context
def main(ctx: click.Context, quiet: bool, verbose: bool) -> None:  # noqa: FBT001
    """Pole-based relaxation, decoherence and moving preferred basis.

    The tolerance profile is read from the environment variable
    POLE_DECOHERENCE_TOLERANCE_PROFILE (``default``, ``strict`` or a TOML path).
    """
    level = logging.WARNING if quiet else logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
    ctx.ensure_object(dict)
    ctx.obj["quiet"] = quiet


@main.command()
@_scenario_option
@_out_option
@click.pass_context
@_exit_codes
def poles(ctx: click.Context, scenario_path: Optional[Path], out_dir: Path) -> None:
    """Compute the pole z0 and its ladder; write poles.csv."""
    _summarize(ctx, pipeline.run_poles(load_scenario(scenario_path), out_dir))


@main.command()
@_scenario_option
@_out_option
@click.pass_context
@_exit_codes
def evolve(ctx: click.Context, scenario_path: Optional[Path], out_dir: Path) -> None:
    """Evolve the reduced state on the time grid; write trajectory.csv."""
    _summarize(ctx, pipeline.run_evolve(load_scenario(scenario_path), out_dir))


@main.command()
@_scenario_option
@_out_option
@click.pass_context
@_exit_codes
def timescales(
    ctx: click.Context,
    scenario_path: Optional[Path],
    out_dir: Path,
) -> None:
    """Compute t_R and t_D; write timescales.json."""
    report = pipeline.run_timescales(load_scenario(scenario_path), out_dir)
    _summarize(ctx, report)
    if not ctx.obj["quiet"] and report.timescales is not None:
        click.echo(f"t_R = {report.timescales.t_R:.12g}")
        click.echo(f"t_D = {report.timescales.t_D:.12g}")


@main.command()
@_scenario_option
@_out_option
@click.pass_context
@_exit_codes
def basis(ctx: click.Context, scenario_path: Optional[Path], out_dir: Path) -> None:
    """Build the moving preferred basis; write basis, diagonality and fidelity CSVs."""
    _summarize(ctx, pipeline.run_basis(load_scenario(scenario_path), out_dir))


@main.command()
@_scenario_option
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Directory receiving verification.json.",
)
@click.option("--list", "list_only", is_flag=True, help="List the criteria and exit.")
@click.option(
    "--only",
    multiple=True,
    type=click.Choice([criterion_id for criterion_id, _ in list_criteria()]),
    help="Run only this criterion (repeatable).",
)
@click.pass_context
@_exit_codes
def verify(
    ctx: click.Context,
    scenario_path: Optional[Path],
    out_dir: Optional[Path],
    list_only: bool,  # noqa: FBT001
    only: tuple[str, ...],
) -> None:
    """Run the acceptance criteria."""
    if list_only:
        for criterion_id, title in list_criteria():
            click.echo(f"{criterion_id}\t{title}")
        return
    summary = run_verify(load_scenario(scenario_path), only=only, errors="ignore")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        artifacts.write_json(summary.to_dict(), out_dir / "verification.json")
    if not ctx.obj["quiet"]:
        for result in summary.results:
            status = "PASS" if result.passed else "FAIL"
            click.echo(f"{status} {result.id} ({result.seconds:.1f}s): {result.detail}")
    if not summary.passed:
        raise VerificationFailedError(failed=summary.failed)
