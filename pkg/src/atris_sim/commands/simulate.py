"""Simulation commands: run a study, describe a scenario, export artifacts.

'run' executes one of the studies and writes one CSV per strategy;
'describe' prints the geometry and feeder spectrum of a scenario;
'export-surface' and 'dump-channels' write the surface program and the
binary channel dumps of the single-configuration scenario.
"""

from pathlib import Path
from typing import Any

import numpy as np
import typer

from atris_sim.config import Config, parse_config
from atris_sim.errors import AtrisError, InvalidArgumentError
from atris_sim.experiments import (
    StudyResult,
    build_channels,
    build_feeder,
    configure,
    run_angular_sweep,
    run_distance_sweep,
    run_power_allocation_study,
    run_scalability_mc,
    run_single,
    two_ue_ring,
)
from atris_sim.geometry import fraunhofer_distance, propagation_regime
from atris_sim.models import RunConfig, Scenario, Strategy, StudyName
from atris_sim.reports import dump_channel_matrix, write_study, write_surface_program
from atris_sim.tris import DiagonalSurface
from atris_sim.ui.console import (
    print_debug,
    print_error,
    print_info,
    print_key_values,
    print_report,
    print_study_summary,
    print_success,
    print_written,
    set_verbosity,
    study_progress,
)

app = typer.Typer(
    help="Run AT-RIS near-field MU-MISO studies and inspect scenarios.",
    rich_markup_mode="rich",
    no_args_is_help=True,
)

CONFIG_HELP = "TOML configuration file (sections system, amaf, tris, ue, run, ...)."
SET_HELP = (
    "Override a config key as key=value (repeatable). Values are TOML literals, bare words "
    "are strings and lists must be TOML arrays: --set tris.rows=10, --set run.study=angular, "
    "--set 'run.strategies=[\"D-FOC-U\", \"ND-EIG-W\"]'."
)


def _split_strategies(raw: str | None) -> list[str] | None:
    if raw is None:
        return None
    return [part.strip() for part in raw.split(",") if part.strip()]


def _load(
    config_path: Path | None,
    overrides: list[str] | None,
    flags: dict[str, Any] | None = None,
) -> RunConfig:
    cfg = parse_config(config_path, overrides, flags)
    print_debug(f"configuration: {cfg.model_dump_json()}")
    return cfg


def _single_scenario(cfg: RunConfig, delta_phi: float | None = None) -> Scenario:
    scenario = cfg.scenario()
    if delta_phi is not None:
        scenario = two_ue_ring(
            scenario, cfg.ue.radius_m, cfg.ue.reference_azimuth_deg, delta_phi
        )
    return scenario


def execute(cfg: RunConfig, delta_phi: float | None = None) -> StudyResult:
    """Run the configured study and return its rows."""
    study = cfg.run.study
    strategies = cfg.run.strategies_for(study)
    base = _single_scenario(cfg, delta_phi if study is StudyName.SINGLE else None)
    reference = cfg.ue.reference_azimuth_deg
    print_info(f"Running {study} study: {', '.join(strategies)} (N={base.tris.size})")

    if study is StudyName.SINGLE:
        return run_single(base, strategies)
    if study is StudyName.ANGULAR:
        with study_progress("angular sweep", len(cfg.angular.delta_phi_deg)) as advance:
            return run_angular_sweep(
                base,
                cfg.angular.distance_m,
                cfg.angular.delta_phi_deg,
                strategies,
                reference_deg=reference,
                progress=advance,
            )
    if study is StudyName.DISTANCE:
        total = len(cfg.distance.distances_m) * len(cfg.distance.delta_phi_deg)
        with study_progress("distance sweep", total) as advance:
            parts = [
                run_distance_sweep(
                    base,
                    cfg.distance.distances_m,
                    dphi,
                    strategies,
                    reference_deg=reference,
                    progress=advance,
                )
                for dphi in cfg.distance.delta_phi_deg
            ]
        return StudyResult.concat(StudyName.DISTANCE, parts)
    if study is StudyName.POWER_ALLOC:
        total = len(cfg.distance.distances_m) * len(cfg.distance.delta_phi_deg)
        with study_progress("power allocation", total) as advance:
            return run_power_allocation_study(
                base,
                cfg.distance.distances_m,
                cfg.distance.delta_phi_deg,
                strategies=strategies,
                reference_deg=reference,
                progress=advance,
            )

    mc = cfg.scalability
    workers = Config().threads
    print_debug(f"Monte Carlo on {workers} thread(s)")
    with study_progress("Monte Carlo trials", len(mc.k_values) * mc.trials) as advance:
        return run_scalability_mc(
            base,
            mc.k_values,
            mc.trials,
            mc.distance_range_m,
            mc.azimuth_range_deg,
            strategies,
            workers=workers,
            progress=advance,
        )


@app.command()
def run(
    config_path: Path | None = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    study: StudyName | None = typer.Option(None, "--study", "-s", help="Study to run."),
    strategy: str | None = typer.Option(
        None, "--strategy", help="Comma-separated strategies, e.g. D-FOC-U,ND-EIG-W."
    ),
    d: float | None = typer.Option(None, "--d", help="UE distance in meters."),
    delta_phi: float | None = typer.Option(
        None, "--delta-phi", help="UE azimuth separation in degrees."
    ),
    k: int | None = typer.Option(None, "--k", min=1, help="Single K for the scalability study."),
    trials: int | None = typer.Option(None, "--trials", min=1, help="Monte Carlo trials."),
    seed: int | None = typer.Option(None, "--seed", min=0, help="Scenario seed (u64)."),
    out: Path | None = typer.Option(None, "--out", "-o", help="Output directory for CSVs."),
    overrides: list[str] | None = typer.Option(None, "--set", help=SET_HELP),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="Print debug lines."),
) -> None:
    """Run a study and write one CSV per strategy.

    **Examples:**

    [green]Angular sweep at 10 m:[/green]
      $ atris-sim sim run --study angular --d 10

    [green]One configuration, one strategy:[/green]
      $ atris-sim sim run --study single --strategy D-FOC-U

    [green]Small Monte Carlo on a toy surface:[/green]
      $ atris-sim sim run --study scalability --trials 50 --seed 7 --set tris.rows=10
    """
    set_verbosity(verbose)
    flags: dict[str, Any] = {
        "run.study": study.value if study is not None else None,
        "run.strategies": _split_strategies(strategy),
        "run.seed": seed,
        "scalability.trials": trials,
        "scalability.k_values": [k] if k is not None else None,
        "angular.distance_m": d,
        "ue.radius_m": d,
        "distance.distances_m": [d] if d is not None else None,
        "angular.delta_phi_deg": [delta_phi] if delta_phi is not None else None,
        "distance.delta_phi_deg": [delta_phi] if delta_phi is not None else None,
    }
    out_dir = out if out is not None else Config().output_dir
    try:
        cfg = _load(config_path, overrides, flags)
        result = execute(cfg, delta_phi)
        if result.study_tag is StudyName.SINGLE:
            for row in result.rows:
                if row.report is not None:
                    print_report(row.report)
        else:
            print_study_summary(result)
        paths = write_study(result, out_dir)
    except (AtrisError, OSError) as exc:
        print_error(str(exc))
        raise typer.Exit(code=1) from exc
    print_written(paths)


@app.command()
def describe(
    config_path: Path | None = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    overrides: list[str] | None = typer.Option(None, "--set", help=SET_HELP),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="Print debug lines."),
) -> None:
    """Print geometry, Fraunhofer distance, UE regimes and the feeder spectrum."""
    set_verbosity(verbose)
    try:
        scenario = _load(config_path, overrides).scenario()
        grid = scenario.tris_grid
        d_ff = fraunhofer_distance(grid, scenario.wavelength)
        feed = scenario.feed_offset_wavelengths * scenario.wavelength
        items = [
            ("Wavelength", f"{scenario.wavelength * 1e3:.4f} mm"),
            ("AMAF", f"{scenario.amaf.rows}x{scenario.amaf.cols} (N_T={scenario.amaf.size})"),
            ("T-RIS", f"{scenario.tris.rows}x{scenario.tris.cols} (N={scenario.tris.size})"),
            ("Aperture diagonal", f"{grid.diagonal_length:.4f} m"),
            ("Fraunhofer distance", f"{d_ff:.3f} m"),
            ("Feeder offset", f"{feed:.4f} m ({propagation_regime(feed, d_ff)})"),
        ]
        center = np.asarray(scenario.tris_center)
        for i, ue in enumerate(scenario.ue_positions, start=1):
            distance = float(np.linalg.norm(np.asarray(ue) - center))
            items.append((f"UE{i}", f"{distance:.3f} m ({propagation_regime(distance, d_ff)})"))
        _, G_svd = build_feeder(scenario)
        spectrum = ", ".join(f"{xi:.4e}" for xi in G_svd.singular_values)
        items.append(("Feeder singular values", spectrum))
        items.append(("Scenario digest", scenario.digest()))
    except (AtrisError, OSError) as exc:
        print_error(str(exc))
        raise typer.Exit(code=1) from exc
    print_key_values("Scenario", items)


@app.command("export-surface")
def export_surface(
    strategy: Strategy = typer.Option(Strategy.D_FOC_U, "--strategy", help="Diagonal strategy."),
    out: Path = typer.Option(Path("surface.txt"), "--out", "-o", help="Surface program file."),
    config_path: Path | None = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    delta_phi: float | None = typer.Option(
        None, "--delta-phi", help="UE azimuth separation in degrees."
    ),
    overrides: list[str] | None = typer.Option(None, "--set", help=SET_HELP),
) -> None:
    """Write the T-RIS phases (radians, row-major, one per line) of a diagonal design."""
    try:
        cfg = _load(config_path, overrides)
        scenario = _single_scenario(cfg, delta_phi).with_strategy(strategy)
        _, surface = configure(strategy, scenario)
        if not isinstance(surface, DiagonalSurface):
            raise InvalidArgumentError(f"{strategy} is not a diagonal design")
        write_surface_program(surface, out)
    except (AtrisError, OSError) as exc:
        print_error(str(exc))
        raise typer.Exit(code=1) from exc
    print_success(f"Wrote {surface.size} phases to {out}")


@app.command("dump-channels")
def dump_channels(
    out: Path = typer.Option(Path("channels"), "--out", "-o", help="Output directory."),
    config_path: Path | None = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    overrides: list[str] | None = typer.Option(None, "--set", help=SET_HELP),
) -> None:
    """Write G and H as binary dumps (G.bin, H.bin)."""
    try:
        scenario = _load(config_path, overrides).scenario()
        channels = build_channels(scenario)
        paths = [
            dump_channel_matrix(channels.G, out / "G.bin"),
            dump_channel_matrix(channels.H, out / "H.bin"),
        ]
    except (AtrisError, OSError) as exc:
        print_error(str(exc))
        raise typer.Exit(code=1) from exc
    print_written(paths)
