"""CLI entrypoint and command registration."""

from typing import Annotated

import typer

from atris_sim import __version__
from atris_sim.commands.simulate import app as simulate_app

# Epilog with copyable commands for root --help (Rich markup enabled)
SAMPLE_COMMANDS = """
**Quick Start Examples** (copy and run these):

- One configuration, every strategy:
  `atris-sim sim run --study single`

- Angular sweep at 10 m (one CSV per strategy in ./results):
  `atris-sim sim run --study angular --d 10`

- Distance sweep at a fixed 30° separation:
  `atris-sim sim run --study distance --delta-phi 30 --strategy ND-EIG-W,D-FOC-U`

- Uniform vs waterfilling focusing:
  `atris-sim sim run --study power-alloc`

- Seeded Monte Carlo on a smaller (10-row) surface:
  `atris-sim sim run --study scalability --trials 50 --seed 7 --set tris.rows=10`

- Inspect a scenario (Fraunhofer distance, UE regimes, feeder spectrum):
  `atris-sim sim describe --config study.toml`

- Export artifacts:
  `atris-sim sim export-surface --strategy D-PEB-U --out peb.txt`
  `atris-sim sim dump-channels --out channels/`

Set ATRIS_SIM_THREADS to run Monte Carlo trials on several threads.
"""

app = typer.Typer(
    help="AT-RIS near-field MU-MISO simulator: beamforming strategies, rates and fairness.",
    no_args_is_help=True,
    add_completion=False,
    rich_markup_mode="rich",
)


def version_callback(value: bool) -> None:
    if value:
        typer.echo(f"atris-sim {__version__}")
        raise typer.Exit()


@app.callback()
def main_callback(
    version: Annotated[
        bool,
        typer.Option(
            "--version",
            "-V",
            help="Show version and exit.",
            callback=version_callback,
            is_eager=True,
        ),
    ] = False,
) -> None:
    """Root command group for all CLI commands."""
    _ = version


app.add_typer(simulate_app, name="sim")

app.info.epilog = SAMPLE_COMMANDS


def main() -> None:
    """Console script entrypoint."""
    app()


if __name__ == "__main__":
    main()
