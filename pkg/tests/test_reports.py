import math
import struct
from pathlib import Path

import numpy as np
import pytest

from atris_sim.errors import InvalidArgumentError
from atris_sim.experiments import MonteCarloSummary, StudyResult, StudyRow
from atris_sim.metrics import build_report
from atris_sim.models import Strategy, StudyName
from atris_sim.reports import (
    DUMP_MAGIC,
    atomic_writer,
    csv_header,
    dump_channel_matrix,
    load_channel_dump,
    read_csv,
    read_surface_program,
    write_csv,
    write_study,
    write_surface_program,
)
from atris_sim.tris import DiagonalSurface


def _row(sweep: dict[str, float], strategy: Strategy, rates: list[float]) -> StudyRow:
    return StudyRow(sweep=sweep, strategy=strategy, report=build_report(rates, strategy, "d1"))


def test_csv_headers() -> None:
    assert csv_header(StudyName.ANGULAR, 2) == [
        "delta_phi_deg", "gamma_1", "gamma_2", "sum_rate", "jain", "strategy", "seed",
    ]  # fmt: skip
    assert csv_header(StudyName.DISTANCE, 1)[:2] == ["distance_m", "delta_phi_deg"]
    assert csv_header(StudyName.POWER_ALLOC, 1)[:2] == ["distance_m", "delta_phi_deg"]
    assert csv_header(StudyName.SINGLE, 1) == ["gamma_1", "sum_rate", "jain", "strategy", "seed"]
    assert csv_header(StudyName.SCALABILITY, 4) == [
        "k", "mean_rate", "rate_var", "rate_std", "mean_sum_rate", "mean_jain", "trials",
        "strategy", "seed",
    ]  # fmt: skip


def test_floats_survive_the_round_trip(tmp_path: Path) -> None:
    rates = [1 / 3, 2.718281828459045e-7]
    result = StudyResult(
        StudyName.ANGULAR,
        (_row({"delta_phi_deg": 0.1}, Strategy.D_FOC_U, rates),),
        seed=2**64 - 1,
    )
    path = write_csv(result, tmp_path / "angular.csv")
    (row,) = read_csv(path)
    assert row["gamma_1"] == rates[0]
    assert row["gamma_2"] == rates[1]
    assert row["delta_phi_deg"] == 0.1
    assert row["sum_rate"] == math.fsum(rates)
    assert row["seed"] == 2**64 - 1
    assert b"\r\n" not in path.read_bytes()


def test_missing_users_leave_empty_cells(tmp_path: Path) -> None:
    result = StudyResult(
        StudyName.SINGLE,
        (
            _row({}, Strategy.D_FOC_U, [1.0]),
            _row({}, Strategy.D_FOC_U, [1.0, 2.0]),
        ),
    )
    rows = read_csv(write_csv(result, tmp_path / "mixed.csv"))
    assert rows[0]["gamma_2"] is None
    assert rows[1]["gamma_2"] == 2.0


def test_empty_result_writes_header_only(tmp_path: Path) -> None:
    path = write_csv(StudyResult(StudyName.ANGULAR, ()), tmp_path / "empty.csv")
    assert path.read_text() == "delta_phi_deg,sum_rate,jain,strategy,seed\n"


def test_write_study_splits_by_strategy(tmp_path: Path) -> None:
    result = StudyResult(
        StudyName.ANGULAR,
        (
            _row({"delta_phi_deg": 0.0}, Strategy.D_FOC_U, [1.0, 0.5]),
            _row({"delta_phi_deg": 0.0}, Strategy.ND_EIG_W, [2.0, 1.5]),
            _row({"delta_phi_deg": 10.0}, Strategy.D_FOC_U, [1.2, 0.7]),
        ),
        seed=5,
    )
    paths = write_study(result, tmp_path)
    assert [p.name for p in paths] == ["angular_D-FOC-U.csv", "angular_ND-EIG-W.csv"]
    focusing = read_csv(paths[0])
    assert [row["delta_phi_deg"] for row in focusing] == [0.0, 10.0]
    assert all(row["strategy"] == "D-FOC-U" and row["seed"] == 5 for row in focusing)


def test_scalability_rows(tmp_path: Path) -> None:
    summary = MonteCarloSummary(
        k=3, mean_rate=1.25, rate_var=0.5, rate_std=0.5**0.5, mean_sum_rate=3.75,
        mean_jain=0.9, trials=10,
    )  # fmt: skip
    result = StudyResult(
        StudyName.SCALABILITY,
        (StudyRow(sweep={"k": 3.0}, strategy=Strategy.D_PEB_U, summary=summary),),
        seed=1,
    )
    (row,) = read_csv(write_csv(result, tmp_path / "mc.csv"))
    assert row["k"] == 3
    assert row["trials"] == 10
    assert row["rate_std"] == 0.5**0.5
    assert row["strategy"] == "D-PEB-U"


def test_atomic_writer_leaves_nothing_on_failure(tmp_path: Path) -> None:
    target = tmp_path / "out.csv"
    with pytest.raises(RuntimeError):
        with atomic_writer(target) as handle:
            handle.write("partial")
            raise RuntimeError("interrupted")
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_surface_program_round_trip(tmp_path: Path) -> None:
    phases = np.exp(1j * np.linspace(-3.0, 3.0, 12))
    surface = DiagonalSurface(phases, Strategy.D_FOC_U)
    path = write_surface_program(surface, tmp_path / "surface.txt")
    assert len(path.read_text().splitlines()) == 12
    assert np.allclose(read_surface_program(path), phases, atol=1e-15)


def test_channel_dump_layout(tmp_path: Path) -> None:
    rng = np.random.default_rng(0)
    matrix = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    path = dump_channel_matrix(matrix, tmp_path / "G.bin")
    data = path.read_bytes()
    magic, rows, cols = struct.unpack_from("<4sII", data)
    assert (magic, rows, cols) == (DUMP_MAGIC, 3, 2)
    assert len(data) == 12 + 3 * 2 * 16
    # row-major: the second stored value is entry (0, 1)
    assert np.frombuffer(data[12:], dtype="<c16")[1] == matrix[0, 1]
    assert np.array_equal(load_channel_dump(path), matrix)


def test_channel_dump_rejects_foreign_files(tmp_path: Path) -> None:
    bogus = tmp_path / "bogus.bin"
    bogus.write_bytes(b"NOPE" + bytes(8))
    with pytest.raises(InvalidArgumentError):
        load_channel_dump(bogus)
    short = tmp_path / "short.bin"
    short.write_bytes(b"ATR")
    with pytest.raises(InvalidArgumentError):
        load_channel_dump(short)
