#!/usr/bin/env python3
"""
Command Line Interface for graetzmodes

This module provides the command-line interface for the graetzmodes solver,
which computes Graetz-type spectra and temperature fields of layered
conjugate heat exchangers without a mesh.

The CLI supports the following operations:
- Eigenvalue tables for one or several azimuthal indices
- Transverse eigenmode profiles
- Field summaries and axial temperature profiles for lateral sources
- Oracle cross-checks of the series results
- Sample configuration files

Key Dependencies:
    - typer: Modern CLI framework
    - rich: Rich text and beautiful formatting

Usage:
    python -m graetzmodes --help
    python -m graetzmodes spectrum --builtin pure-diffusion --order 120
    python -m graetzmodes solve --config sample_config.yml
"""

from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
import typer
from rich.console import Console
from rich.table import Table

from graetzmodes import __app_name__, __version__
from graetzmodes.config import DEFAULT_SETTINGS, SolverSettings
from graetzmodes.config_parser import ConfigParser
from graetzmodes.domain import BoundaryKind, BoundarySpec, DomainSpec, Geometry, builtin
from graetzmodes.errors import ConfigError, GraetzError, ValidationFailure
from graetzmodes.fields import heat_balance, heat_balance_error, profile as field_profile, solve as solve_field, summary
from graetzmodes.logging import configure_logging, get_logger, log_error
from graetzmodes.oracle import verify
from graetzmodes.spectrum import compute_spectrum, eigenmode, full_spectrum, mode_profile_table, spectra_frame
from graetzmodes.utils import write_csv

# Logger
logger = get_logger(__name__)

# Main app
app = typer.Typer(help="Mesh-less Graetz spectra and temperature fields for layered exchangers.")
console = Console()
stderr_console = Console(stderr=True)


# Main callback


def _version_callback(value: bool) -> None:
    if value:
        typer.echo(f"{__app_name__} v{__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        help="Show the application's version and exit.",
        callback=_version_callback,
        is_eager=True,
    ),
    verbose: bool = typer.Option(False, "--verbose", help="Log at DEBUG level."),
    log_dir: Optional[Path] = typer.Option(None, "--log-dir", help="Also write rotating log files here."),
) -> None:
    """
    graetzmodes - closure-function solver for generalized Graetz problems.
    """
    configure_logging(
        level="DEBUG" if verbose else "INFO",
        log_dir=log_dir,
        enable_file_logging=log_dir is not None,
        enable_console_logging=True,
        use_rich=True,
    )


# =============================================================================
# HELPERS
# =============================================================================

@contextmanager
def _exit_on_error():
    """Map package errors onto their exit codes."""
    try:
        yield
    except GraetzError as e:
        log_error(e, context="command failed", exit_code=e.exit_code)
        raise typer.Exit(e.exit_code)


def _load_problem(
    config_file: Optional[Path],
    builtin_name: Optional[str],
    pe: Optional[float],
    x0: Optional[float],
    radius: Optional[float],
    bc: Optional[BoundaryKind],
    order: Optional[int] = None,
    modes: Optional[int] = None,
) -> Tuple[DomainSpec, BoundarySpec, SolverSettings]:
    if bool(config_file) == bool(builtin_name):
        raise ConfigError("Specify exactly one of --config or --builtin")

    if config_file:
        logger.info(f"Loading configuration from: {config_file}")
        config = ConfigParser.load_config(config_file)
        spec, boundary, settings = config.spec, config.boundary, config.settings
    else:
        params = {'pe': pe, 'radius': radius}
        if builtin_name == 'double-pass':
            params['x0'] = x0
        elif x0 is not None:
            raise ConfigError("--x0 only applies to the double-pass builtin")
        if builtin_name == 'pure-diffusion':
            if pe is not None:
                raise ConfigError("--pe does not apply to the pure-diffusion builtin")
            params.pop('pe')
        spec, boundary = builtin(builtin_name, **params)
        settings = DEFAULT_SETTINGS

    if bc is not None:
        boundary = BoundarySpec(BoundaryKind(bc), boundary.source)
    settings = settings.with_overrides(order=order, mode_count=modes)
    return spec, boundary, settings


def _parse_floats(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise ConfigError(f"Cannot read comma separated numbers from {text!r}")


def _emit(frame: pd.DataFrame, out: Optional[Path]) -> None:
    written = write_csv(frame, out)
    if written is not None:
        stderr_console.print(f"[green]✓ Wrote {len(frame)} rows to {written}")


ConfigOption = typer.Option(None, "--config", help="Problem configuration file (YAML or JSON).")
BuiltinOption = typer.Option(None, "--builtin", help="Builtin problem: heated-pipe, double-pass, pure-diffusion.")
PeOption = typer.Option(None, "--pe", help="Peclet number for builtins.")
X0Option = typer.Option(None, "--x0", help="Channel half gap for double-pass.")
RadiusOption = typer.Option(None, "--radius", help="Outer radius R for builtins.")
BcOption = typer.Option(None, "--bc", help="Override the boundary kind.", case_sensitive=False)
OrderOption = typer.Option(None, "--order", help="Closure truncation order P.")
OutOption = typer.Option(None, "--out", help="Output CSV path (stdout when omitted).")


# =============================================================================
# COMMANDS
# =============================================================================

@app.command("spectrum")
def spectrum_command(
    config_file: Optional[Path] = ConfigOption,
    builtin_name: Optional[str] = BuiltinOption,
    pe: Optional[float] = PeOption,
    x0: Optional[float] = X0Option,
    radius: Optional[float] = RadiusOption,
    bc: Optional[BoundaryKind] = BcOption,
    n_max: int = typer.Option(0, "--n-max", min=0, help="Largest azimuthal index."),
    order: Optional[int] = OrderOption,
    out: Optional[Path] = OutOption,
):
    """
    Eigenvalues inside the trust radius for n = 0..n_max.

    CSV columns: n, index, lambda, class, residual, stability_gap.
    """
    with _exit_on_error():
        spec, boundary, settings = _load_problem(config_file, builtin_name, pe, x0, radius, bc, order)
        spectra = full_spectrum(spec, boundary.kind, n_max, settings=settings)
        for n, spectrum in spectra:
            if settings.trust_estimate == 'bound' and spectrum.bound_is_heuristic:
                logger.warning(f"Tail bound is heuristic for this domain (R > 1) | n={n}")
        _emit(spectra_frame(spectra), out)


@app.command("modes")
def modes_command(
    config_file: Optional[Path] = ConfigOption,
    builtin_name: Optional[str] = BuiltinOption,
    pe: Optional[float] = PeOption,
    x0: Optional[float] = X0Option,
    radius: Optional[float] = RadiusOption,
    bc: Optional[BoundaryKind] = BcOption,
    n: int = typer.Option(0, "--n", min=0, help="Azimuthal index."),
    count: int = typer.Option(3, "--count", min=1, help="Modes per class."),
    points: int = typer.Option(101, "--points", min=2, help="Transverse grid points."),
    order: Optional[int] = OrderOption,
    out: Optional[Path] = OutOption,
):
    """
    Eigenmode profiles on a uniform transverse grid, closest eigenvalues first.
    """
    with _exit_on_error():
        spec, boundary, settings = _load_problem(config_file, builtin_name, pe, x0, radius, bc, order)
        spectrum = compute_spectrum(spec, boundary.kind, n, settings=settings,
                                    min_per_class=count).limited(count)
        modes = [eigenmode(spectrum.table, lam, boundary.kind, radius=spectrum.trust_radius, settings=settings)
                 for lam in spectrum.downstream() + spectrum.upstream()]
        lo, hi = float(spec.breakpoints[0]), float(spec.breakpoints[-1])
        coordinate = 'r' if spec.geometry == Geometry.CYLINDRICAL else 'x'
        _emit(mode_profile_table(modes, np.linspace(lo, hi, points), coordinate), out)


@app.command("solve")
def solve_command(
    config_file: Optional[Path] = ConfigOption,
    builtin_name: Optional[str] = BuiltinOption,
    pe: Optional[float] = PeOption,
    x0: Optional[float] = X0Option,
    radius: Optional[float] = RadiusOption,
    order: Optional[int] = OrderOption,
    modes: Optional[int] = typer.Option(None, "--modes", min=1, help="Modes per class."),
    out: Optional[Path] = OutOption,
):
    """
    Assemble the n = 0 field and print its far-field and hot-spot summary.
    """
    with _exit_on_error():
        spec, boundary, settings = _load_problem(config_file, builtin_name, pe, x0, radius, None, order, modes)
        field = solve_field(spec, boundary, settings=settings)
        result = summary(field)

        table = Table(title="Field summary")
        table.add_column("quantity", style="cyan")
        table.add_column("value", justify="right")
        for key, value in result.items():
            table.add_row(key, f"{value:.10g}" if isinstance(value, float) else str(value))
        console.print(table)

        if out is not None:
            write_csv(pd.DataFrame({'quantity': list(result), 'value': [str(v) for v in result.values()]}), out)


@app.command("profile")
def profile_command(
    config_file: Optional[Path] = ConfigOption,
    builtin_name: Optional[str] = BuiltinOption,
    pe: Optional[float] = PeOption,
    x0: Optional[float] = X0Option,
    radius: Optional[float] = RadiusOption,
    order: Optional[int] = OrderOption,
    modes: Optional[int] = typer.Option(None, "--modes", min=1, help="Modes per class."),
    stations: Optional[str] = typer.Option(None, "--stations", help="Comma separated transverse stations."),
    z_min: float = typer.Option(-3.0, "--z-min", help="First axial station."),
    z_max: float = typer.Option(8.0, "--z-max", help="Last axial station."),
    z_points: int = typer.Option(221, "--z-points", min=2, help="Number of axial stations."),
    out: Optional[Path] = OutOption,
):
    """
    Temperature against z at fixed transverse stations.

    CSV columns: z, then one T(r=...) or T(x=...) column per station.
    """
    with _exit_on_error():
        if z_max <= z_min:
            raise ConfigError("--z-max must exceed --z-min")
        spec, boundary, settings = _load_problem(config_file, builtin_name, pe, x0, radius, None, order, modes)
        field = solve_field(spec, boundary, settings=settings)
        frame = field_profile(field, _parse_floats(stations), np.linspace(z_min, z_max, z_points))
        _emit(frame, out)


@app.command("validate")
def validate_command(
    config_file: Optional[Path] = ConfigOption,
    builtin_name: Optional[str] = BuiltinOption,
    pe: Optional[float] = PeOption,
    x0: Optional[float] = X0Option,
    radius: Optional[float] = RadiusOption,
    bc: Optional[BoundaryKind] = BcOption,
    n: int = typer.Option(0, "--n", min=0, help="Azimuthal index."),
    order: Optional[int] = OrderOption,
    points: int = typer.Option(50, "--points", min=2, help="Lambda grid points for series-vs-shooting."),
    balance: bool = typer.Option(False, "--balance", help="Also check the heat balance of the assembled field."),
    out: Optional[Path] = OutOption,
):
    """
    Cross-check the series path against the independent oracle.

    Exits with code 4 when a check exceeds its tolerance.
    """
    with _exit_on_error():
        spec, boundary, settings = _load_problem(config_file, builtin_name, pe, x0, radius, bc, order)
        label = builtin_name or str(config_file)
        report = verify(spec, boundary.kind, n, points=points, settings=settings, label=label)
        if balance and boundary.kind == BoundaryKind.NEUMANN:
            field = solve_field(spec, boundary, settings=settings)
            report.add('heat balance (relative)', heat_balance_error(heat_balance(field)), 1e-4)

        table = Table(title=f"Validation: {label}")
        table.add_column("check", style="cyan")
        table.add_column("error", justify="right")
        table.add_column("tolerance", justify="right")
        table.add_column("status")
        for check in report.checks:
            status = "[green]pass" if check.passed else "[red]FAIL"
            table.add_row(check.name, f"{check.error:.3e}", f"{check.tolerance:.1e}", status)
        console.print(table)

        if out is not None:
            write_csv(report.frame(), out)
        if not report.passed:
            raise ValidationFailure(f"{sum(not c.passed for c in report.checks)} check(s) failed for {label}")


@app.command("create-sample-config")
def create_sample_config(
    output: Path = typer.Option(Path("sample_config.yml"), "--output", "-o", help="Where to write the sample."),
    format: str = typer.Option("yaml", "--format", help="yaml or json"),
):
    """
    Write a commented heated-pipe configuration to start from.
    """
    with _exit_on_error():
        ConfigParser.create_sample_config(output, format)
        console.print(f"[green]✓ Sample configuration created: {output}")


if __name__ == "__main__":
    app()
