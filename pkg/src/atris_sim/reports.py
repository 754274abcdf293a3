"""Result files: study CSVs, surface programs and binary channel dumps.

All writers go through a temporary sibling file that is renamed into place,
so an interrupted run never leaves a half-written result behind.
"""

import csv
import os
import struct
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any

import numpy as np
from numpy.typing import ArrayLike

from atris_sim.channel import ChannelMatrix, ComplexArray
from atris_sim.errors import InvalidArgumentError
from atris_sim.experiments import StudyResult, StudyRow
from atris_sim.models import Strategy, StudyName
from atris_sim.tris import DiagonalSurface

DUMP_MAGIC = b"ATRS"
_DUMP_HEADER = struct.Struct("<4sII")
_DUMP_DTYPE = np.dtype("<c16")

_SWEEP_COLUMNS: dict[StudyName, tuple[str, ...]] = {
    StudyName.ANGULAR: ("delta_phi_deg",),
    StudyName.DISTANCE: ("distance_m", "delta_phi_deg"),
    StudyName.POWER_ALLOC: ("distance_m", "delta_phi_deg"),
    StudyName.SINGLE: (),
}
_SCALABILITY_COLUMNS = (
    "k",
    "mean_rate",
    "rate_var",
    "rate_std",
    "mean_sum_rate",
    "mean_jain",
    "trials",
)


def format_float(value: float) -> str:
    """Shortest decimal that round-trips to the same double."""
    return repr(float(value))


def csv_path(out_dir: Path, study: StudyName, strategy: Strategy) -> Path:
    return out_dir / f"{study.value}_{strategy.value}.csv"


@contextmanager
def atomic_writer(path: Path, mode: str = "w") -> Iterator[IO[Any]]:
    """Open a temporary sibling of `path`; rename it over `path` on success."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    try:
        if "b" in mode:
            with open(tmp, mode) as handle:
                yield handle
        else:
            with open(tmp, mode, encoding="utf-8", newline="") as handle:
                yield handle
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def max_ues(rows: list[StudyRow]) -> int:
    return max((row.report.k for row in rows if row.report is not None), default=0)


def csv_header(study: StudyName, k: int) -> list[str]:
    if study is StudyName.SCALABILITY:
        return [*_SCALABILITY_COLUMNS, "strategy", "seed"]
    rates = [f"gamma_{i + 1}" for i in range(k)]
    return [*_SWEEP_COLUMNS[study], *rates, "sum_rate", "jain", "strategy", "seed"]


def _row_fields(study: StudyName, row: StudyRow, k: int, seed: int) -> dict[str, str]:
    fields: dict[str, str] = {"strategy": row.strategy.value, "seed": str(seed)}
    if study is StudyName.SCALABILITY:
        summary = row.summary
        if summary is None:
            raise InvalidArgumentError("scalability row without a Monte Carlo summary")
        fields["k"] = str(summary.k)
        fields["trials"] = str(summary.trials)
        for name in ("mean_rate", "rate_var", "rate_std", "mean_sum_rate", "mean_jain"):
            fields[name] = format_float(getattr(summary, name))
        return fields

    report = row.report
    if report is None:
        raise InvalidArgumentError(f"{study} row without a rate report")
    for name in _SWEEP_COLUMNS[study]:
        fields[name] = format_float(row.sweep[name])
    for i in range(k):
        # absent UEs leave their column empty
        fields[f"gamma_{i + 1}"] = (
            format_float(report.per_ue_rates[i]) if i < report.k else ""
        )
    fields["sum_rate"] = format_float(report.sum_rate)
    fields["jain"] = format_float(report.jain)
    return fields


def write_csv(
    result: StudyResult, path: Path, strategy: Strategy | None = None, k: int | None = None
) -> Path:
    """Write the rows of `result` (optionally one strategy only) to `path`.

    `k` fixes the number of rate columns; it defaults to the largest UE count
    among the rows, and an empty result still gets a header.
    """
    rows = list(result.rows) if strategy is None else result.for_strategy(strategy)
    width = k if k is not None else max_ues(rows)
    header = csv_header(result.study_tag, width)
    with atomic_writer(path) as handle:
        writer = csv.DictWriter(handle, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(_row_fields(result.study_tag, row, width, result.seed))
    return path


def write_study(result: StudyResult, out_dir: Path) -> list[Path]:
    """One CSV per strategy, named `{study}_{strategy}.csv`."""
    width = max_ues(list(result.rows))
    written: list[Path] = []
    try:
        for strategy in result.strategies:
            target = csv_path(out_dir, result.study_tag, strategy)
            written.append(write_csv(result, target, strategy, k=width))
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def read_csv(path: Path) -> list[dict[str, str | float | int | None]]:
    """Parse a study CSV back; numeric columns become floats (ints for counts)."""
    parsed: list[dict[str, str | float | int | None]] = []
    with open(path, encoding="utf-8", newline="") as handle:
        for record in csv.DictReader(handle):
            row: dict[str, str | float | int | None] = {}
            for key, value in record.items():
                if key == "strategy":
                    row[key] = value
                elif key in ("seed", "k", "trials"):
                    row[key] = int(value)
                elif value == "":
                    row[key] = None
                else:
                    row[key] = float(value)
            parsed.append(row)
    return parsed


def write_surface_program(surface: DiagonalSurface, path: Path) -> Path:
    """One phase in radians per line, in row-major element order."""
    with atomic_writer(path) as handle:
        for phase in surface.phase_radians():
            handle.write(format_float(phase) + "\n")
    return path


def read_surface_program(path: Path) -> ComplexArray:
    phases = [float(line) for line in path.read_text(encoding="utf-8").splitlines() if line]
    return np.exp(1j * np.asarray(phases, dtype=np.float64))


def dump_channel_matrix(matrix: ChannelMatrix | ArrayLike, path: Path) -> Path:
    """Binary dump: "ATRS", u32 rows, u32 cols, then row-major little-endian complex128."""
    raw = matrix.entries if isinstance(matrix, ChannelMatrix) else matrix
    entries = np.asarray(raw, dtype=np.complex128)
    if entries.ndim != 2:
        raise InvalidArgumentError(f"channel dump expects a matrix, got {entries.ndim} dims")
    rows, cols = entries.shape
    with atomic_writer(path, "wb") as handle:
        handle.write(_DUMP_HEADER.pack(DUMP_MAGIC, rows, cols))
        handle.write(np.ascontiguousarray(entries, dtype=_DUMP_DTYPE).tobytes(order="C"))
    return path


def load_channel_dump(path: Path) -> ComplexArray:
    data = path.read_bytes()
    if len(data) < _DUMP_HEADER.size:
        raise InvalidArgumentError(f"{path} is too short for a channel dump")
    magic, rows, cols = _DUMP_HEADER.unpack_from(data)
    if magic != DUMP_MAGIC:
        raise InvalidArgumentError(f"{path} is not a channel dump (magic {magic!r})")
    payload = data[_DUMP_HEADER.size :]
    expected = rows * cols * _DUMP_DTYPE.itemsize
    if len(payload) != expected:
        raise InvalidArgumentError(
            f"{path} holds {len(payload)} payload bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype=_DUMP_DTYPE).reshape(rows, cols).astype(np.complex128)
