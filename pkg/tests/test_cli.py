from pathlib import Path

import pytest
from typer.testing import CliRunner

from atris_sim import __version__
from atris_sim.main import app
from atris_sim.reports import load_channel_dump, read_csv, read_surface_program

runner = CliRunner()

# 2x2 feeder and 10x10 surface keep every CLI run fast
TOY = [
    "--set", "tris.rows=10",
    "--set", "tris.cols=10",
    "--set", "amaf.rows=2",
    "--set", "amaf.cols=2",
]  # fmt: skip


@pytest.fixture
def out_dir(tmp_path: Path) -> Path:
    """Fresh results directory for one test."""
    return tmp_path / "results"


def test_help_lists_simulation_commands() -> None:
    """Root help shows the description and the sim group."""
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    assert "AT-RIS" in result.stdout
    assert "sim" in result.stdout


def test_version_flag() -> None:
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.stdout


def test_run_single_writes_one_csv(out_dir: Path) -> None:
    """Single configuration with one strategy gives a header plus one row."""
    result = runner.invoke(
        app,
        ["sim", "run", "--study", "single", "--strategy", "D-FOC-U", *TOY, "--out", str(out_dir)],
    )
    assert result.exit_code == 0, result.stdout
    csv_file = out_dir / "single_D-FOC-U.csv"
    assert csv_file.exists()
    rows = read_csv(csv_file)
    assert len(rows) == 1
    assert rows[0]["strategy"] == "D-FOC-U"
    assert rows[0]["seed"] == 0
    assert isinstance(rows[0]["sum_rate"], float)
    assert "Jain" in result.stdout


def test_run_angular_writes_one_file_per_strategy(out_dir: Path) -> None:
    result = runner.invoke(
        app,
        [
            "sim", "run", "--study", "angular", "--d", "3",
            "--strategy", "D-FOC-U,ND-EIG-W", *TOY, "--out", str(out_dir),
        ],
    )  # fmt: skip
    assert result.exit_code == 0, result.stdout
    for name in ("angular_D-FOC-U.csv", "angular_ND-EIG-W.csv"):
        rows = read_csv(out_dir / name)
        assert [row["delta_phi_deg"] for row in rows] == [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0]
    header = (out_dir / "angular_D-FOC-U.csv").read_text().splitlines()[0]
    assert header == "delta_phi_deg,gamma_1,gamma_2,sum_rate,jain,strategy,seed"


def test_run_distance_with_single_separation(out_dir: Path) -> None:
    result = runner.invoke(
        app,
        [
            "sim", "run", "--study", "distance", "--delta-phi", "30",
            "--strategy", "D-MMSE-U", *TOY,
            "--set", "distance.distances_m=[2.0, 4.0]", "--out", str(out_dir),
        ],
    )  # fmt: skip
    assert result.exit_code == 0, result.stdout
    rows = read_csv(out_dir / "distance_D-MMSE-U.csv")
    assert [(row["distance_m"], row["delta_phi_deg"]) for row in rows] == [(2.0, 30.0), (4.0, 30.0)]


def test_scalability_output_is_byte_identical(tmp_path: Path) -> None:
    """Same seed, same CSV bytes."""
    outputs = []
    for name in ("first", "second"):
        target = tmp_path / name
        result = runner.invoke(
            app,
            [
                "sim", "run", "--study", "scalability", "--trials", "3", "--seed", "7",
                "--k", "2", "--strategy", "D-FOC-U,D-PEB-U", *TOY,
                "--set", "scalability.distance_range_m=[1.0, 4.0]", "--out", str(target),
            ],
        )  # fmt: skip
        assert result.exit_code == 0, result.stdout
        outputs.append((target / "scalability_D-PEB-U.csv").read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[0].startswith(
        b"k,mean_rate,rate_var,rate_std,mean_sum_rate,mean_jain,trials,strategy,seed\n"
    )
    assert b"\r\n" not in outputs[0]


def test_malformed_override_names_the_key(out_dir: Path) -> None:
    result = runner.invoke(
        app, ["sim", "run", "--study", "single", "--set", "tris.rows=abc", "--out", str(out_dir)]
    )
    assert result.exit_code == 1
    assert "tris.rows" in result.stdout
    assert not out_dir.exists()


def test_unknown_strategy_is_rejected(out_dir: Path) -> None:
    result = runner.invoke(
        app, ["sim", "run", "--strategy", "D-XYZ", *TOY, "--out", str(out_dir)]
    )
    assert result.exit_code == 1
    assert "run.strategies" in result.stdout


def test_missing_config_file(tmp_path: Path) -> None:
    result = runner.invoke(app, ["sim", "run", "--config", str(tmp_path / "nope.toml")])
    assert result.exit_code == 1
    assert "config file not found" in result.stdout


def test_config_file_drives_the_run(tmp_path: Path) -> None:
    config = tmp_path / "study.toml"
    config.write_text(
        "[amaf]\nrows = 2\ncols = 2\n\n[tris]\nrows = 6\ncols = 6\n\n"
        '[run]\nstudy = "single"\nstrategies = ["ND-MMSE-U"]\n',
        encoding="utf-8",
    )
    out_dir = tmp_path / "results"
    result = runner.invoke(app, ["sim", "run", "--config", str(config), "--out", str(out_dir)])
    assert result.exit_code == 0, result.stdout
    assert (out_dir / "single_ND-MMSE-U.csv").exists()
    assert "Frobenius" in result.stdout


def test_describe_prints_fraunhofer_distance() -> None:
    result = runner.invoke(app, ["sim", "describe", *TOY])
    assert result.exit_code == 0, result.stdout
    assert "Fraunhofer distance" in result.stdout
    assert "near-field" in result.stdout


def test_export_surface_writes_one_phase_per_element(tmp_path: Path) -> None:
    target = tmp_path / "peb.txt"
    result = runner.invoke(
        app, ["sim", "export-surface", "--strategy", "D-PEB-U", *TOY, "--out", str(target)]
    )
    assert result.exit_code == 0, result.stdout
    phases = read_surface_program(target)
    assert phases.size == 100


def test_export_surface_rejects_non_diagonal_design(tmp_path: Path) -> None:
    target = tmp_path / "eig.txt"
    result = runner.invoke(
        app, ["sim", "export-surface", "--strategy", "ND-EIG-W", *TOY, "--out", str(target)]
    )
    assert result.exit_code == 1
    assert not target.exists()


def test_dump_channels(tmp_path: Path) -> None:
    target = tmp_path / "channels"
    result = runner.invoke(app, ["sim", "dump-channels", *TOY, "--out", str(target)])
    assert result.exit_code == 0, result.stdout
    assert load_channel_dump(target / "G.bin").shape == (100, 4)
    assert load_channel_dump(target / "H.bin").shape == (2, 100)


def test_set_help_explains_list_syntax() -> None:
    result = runner.invoke(app, ["sim", "run", "--help"])
    assert result.exit_code == 0
    assert "run.strategies=" in result.stdout


def test_strategy_list_through_set(out_dir: Path) -> None:
    result = runner.invoke(
        app,
        [
            "sim", "run", "--study", "single", *TOY,
            "--set", 'run.strategies=["D-FOC-U", "D-MMSE-U"]', "--out", str(out_dir),
        ],
    )  # fmt: skip
    assert result.exit_code == 0, result.stdout
    assert sorted(p.name for p in out_dir.iterdir()) == [
        "single_D-FOC-U.csv",
        "single_D-MMSE-U.csv",
    ]
