"""Shared Rich console and output helpers."""

from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path

from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from atris_sim.experiments import ProgressCallback, StudyResult
from atris_sim.metrics import RateReport

console = Console()

_verbosity = 0


def set_verbosity(level: int) -> None:
    global _verbosity
    _verbosity = level


def print_info(message: str) -> None:
    """Print informational message in cyan."""
    console.print(f"[bold cyan]info:[/bold cyan] {message}")


def print_success(message: str) -> None:
    """Print success message in green."""
    console.print(f"[bold green]success:[/bold green] {message}")


def print_warning(message: str) -> None:
    """Print warning message in yellow."""
    console.print(f"[bold yellow]warning:[/bold yellow] {message}")


def print_error(message: str) -> None:
    """Print error message in red."""
    console.print(f"[bold red]error:[/bold red] {message}")


def print_debug(message: str) -> None:
    """Print a dim debug line, only with -v."""
    if _verbosity > 0:
        console.print(f"[dim]debug: {message}[/dim]")


def _rate(value: float) -> str:
    return f"{value:.4f}"


def print_report(report: RateReport, title: str | None = None) -> None:
    """Per-UE rates, sum-rate and fairness of one configuration."""
    table = Table(title=title or f"{report.strategy} rates")
    table.add_column("UE", style="bold")
    table.add_column("Rate [bps/Hz]", justify="right")
    for i, rate in enumerate(report.per_ue_rates, start=1):
        table.add_row(str(i), _rate(rate))
    table.add_row("Σ", _rate(report.sum_rate), style="green")
    table.add_row("Jain", f"{report.jain:.6f}")
    console.print(table)
    if report.cooperative:
        print_info("rates assume joint receive combining across UEs")
    for note in report.notes:
        print_warning(note)


def print_study_summary(result: StudyResult) -> None:
    """Compact table: one line per strategy with its best and worst sum-rate."""
    table = Table(title=f"{result.study_tag} study (seed {result.seed})")
    table.add_column("Strategy", style="bold")
    table.add_column("Rows", justify="right")
    table.add_column("Min Σ rate", justify="right")
    table.add_column("Max Σ rate", justify="right")
    table.add_column("Mean Jain", justify="right")
    for strategy in result.strategies:
        rows = result.for_strategy(strategy)
        sums: list[float] = []
        jains: list[float] = []
        for row in rows:
            if row.report is not None:
                sums.append(row.report.sum_rate)
                jains.append(row.report.jain)
            elif row.summary is not None:
                sums.append(row.summary.mean_sum_rate)
                jains.append(row.summary.mean_jain)
        if not sums:
            continue
        table.add_row(
            strategy.value,
            str(len(rows)),
            _rate(min(sums)),
            _rate(max(sums)),
            f"{sum(jains) / len(jains):.4f}",
        )
    console.print(table)


def print_written(paths: Sequence[Path]) -> None:
    for path in paths:
        print_debug(f"wrote {path}")
    print_success(f"Wrote {len(paths)} file(s)")


def print_key_values(title: str, items: Sequence[tuple[str, str]]) -> None:
    table = Table(title=title, show_header=False)
    table.add_column("Item", style="bold", no_wrap=True)
    table.add_column("Value")
    for key, value in items:
        table.add_row(key, value)
    console.print(table)


@contextmanager
def study_progress(description: str, total: int) -> Iterator[ProgressCallback]:
    """Progress bar whose callback advances by the given number of steps."""
    progress = Progress(
        TextColumn("[bold cyan]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )
    with progress:
        task = progress.add_task(description, total=total)

        def advance(steps: int) -> None:
            progress.advance(task, steps)

        yield advance
