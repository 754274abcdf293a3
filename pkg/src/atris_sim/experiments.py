"""Strategy dispatch and the four simulation studies.

`configure` turns a Scenario into the AMAF beamformers and T-RIS surface of
one strategy; `evaluate` adds the rate computation. The study runners sweep
UE placements and collect one row per (sweep point, strategy).
"""

import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from numpy.typing import NDArray

from atris_sim.channel import (
    CanonicalSvd,
    ChannelMatrix,
    ChannelSet,
    GainModel,
    build_channel_matrix,
    effective_channel,
    svd_canonical,
)
from atris_sim.errors import InvalidArgumentError
from atris_sim.geometry import place_ue_ring
from atris_sim.metrics import (
    PASSIVITY_NOTE,
    RateReport,
    build_report,
    cooperative_rates,
    jain_index,
    noise_power,
    per_ue_sinr_rates,
)
from atris_sim.models import POWER_ALLOC_STRATEGIES, Scenario, Strategy, StudyName
from atris_sim.precoding import (
    BeamformerSet,
    allocate_uniform,
    allocate_waterfilling,
    amaf_directions,
    assemble_B,
)
from atris_sim.tris import (
    SurfaceConfig,
    combine_diagonal,
    mmse_matrix,
    nf_focusing_vector,
    partition_sectors,
    phi_eigenmode,
    phi_mmse_nondiag,
    psi_focusing,
    psi_mmse,
    psi_peb,
)

FloatArray = NDArray[np.float64]
Feeder = tuple[ChannelMatrix, CanonicalSvd]
ProgressCallback = Callable[[int], None]


def build_feeder(scenario: Scenario) -> Feeder:
    """AMAF -> T-RIS channel G and its canonical SVD; depends only on the array geometry."""
    G = build_channel_matrix(
        scenario.amaf_grid.positions,
        scenario.tris_grid.positions,
        scenario.wavelength,
        GainModel.TX_FRAME,
        tx_normal=scenario.amaf_grid.normal,
        tx_grid_id="amaf",
        rx_grid_id="tris",
    )
    return G, svd_canonical(G)


def build_channels(scenario: Scenario, feeder: Feeder | None = None) -> ChannelSet:
    G, G_svd = feeder if feeder is not None else build_feeder(scenario)
    H = build_channel_matrix(
        scenario.tris_grid.positions,
        np.asarray(scenario.ue_positions, dtype=np.float64),
        scenario.wavelength,
        GainModel.RX_FRAME,
        tx_grid_id="tris",
        rx_grid_id="ue",
    )
    return ChannelSet(G=G, H=H, G_svd=G_svd, H_svd=svd_canonical(H))


def _uniform_feeder(channels: ChannelSet, scenario: Scenario) -> BeamformerSet:
    directions = amaf_directions(channels.G_svd, scenario.k)
    return assemble_B(directions, allocate_uniform(scenario.total_power_w, scenario.k))


def _focusing_surface(
    channels: ChannelSet, scenario: Scenario, strategy: Strategy
) -> SurfaceConfig:
    u = channels.G_svd.left
    grid, wavelength = scenario.tris_grid, scenario.wavelength
    psis = [
        psi_focusing(u[:, k], nf_focusing_vector(grid, ue, wavelength), k)
        for k, ue in enumerate(scenario.ue_positions)
    ]
    return combine_diagonal(psis, strategy)


def _peb(channels: ChannelSet, scenario: Scenario) -> tuple[BeamformerSet, SurfaceConfig]:
    partition = partition_sectors(scenario.tris_grid, scenario.k, scenario.ue_positions)
    psis = []
    directions = []
    for k, (sector, ue) in enumerate(zip(partition.index_sets, scenario.ue_positions)):
        psi, b_k = psi_peb(
            channels.G,
            sector,
            ue,
            scenario.wavelength,
            scenario.tris_grid,
            ue_index=k,
            steering=scenario.peb_steering,
            reference=channels.G_svd,
        )
        psis.append(psi)
        directions.append(b_k)
    beams = assemble_B(
        np.stack(directions, axis=1), allocate_uniform(scenario.total_power_w, scenario.k)
    )
    return beams, combine_diagonal(psis, Strategy.D_PEB_U)


def configure(
    strategy: Strategy, scenario: Scenario, channels: ChannelSet | None = None
) -> tuple[BeamformerSet, SurfaceConfig]:
    """AMAF beamformers B and T-RIS surface Φ for `strategy`."""
    channels = channels if channels is not None else build_channels(scenario)
    k = scenario.k
    if strategy is not Strategy.D_PEB_U and k > channels.G_svd.rank_used:
        raise InvalidArgumentError(
            f"{strategy} needs K={k} feeder modes, G has rank {channels.G_svd.rank_used}"
        )
    noise = noise_power(scenario.noise_psd_dbm_hz, scenario.bandwidth_hz)

    match strategy:
        case Strategy.D_FOC_U:
            return _uniform_feeder(channels, scenario), _focusing_surface(
                channels, scenario, strategy
            )
        case Strategy.D_FOC_W:
            surface = _focusing_surface(channels, scenario, strategy)
            end_to_end = effective_channel(channels.H, surface, channels.G)
            lambda_e = svd_canonical(end_to_end.entries).singular_values
            gains_sq = np.zeros(k)
            gains_sq[: min(k, lambda_e.size)] = lambda_e[:k] ** 2
            powers = allocate_waterfilling(gains_sq, noise, scenario.total_power_w)
            return assemble_B(amaf_directions(channels.G_svd, k), powers), surface
        case Strategy.D_MMSE_U:
            L = mmse_matrix(channels.H, scenario.delta_tx)
            u = channels.G_svd.left
            psis = [psi_mmse(u[:, i], L[:, i], i) for i in range(k)]
            return _uniform_feeder(channels, scenario), combine_diagonal(psis, strategy)
        case Strategy.D_PEB_U:
            return _peb(channels, scenario)
        case Strategy.ND_EIG_W:
            surface = phi_eigenmode(
                channels.G_svd, channels.H_svd, explicit=scenario.eigenmode_explicit
            )
            xi = channels.G_svd.singular_values
            rho = channels.H_svd.singular_values
            m = min(k, xi.size, rho.size)
            gains_sq = np.zeros(k)
            gains_sq[:m] = (xi[:m] * rho[:m]) ** 2
            powers = allocate_waterfilling(gains_sq, noise, scenario.total_power_w)
            return assemble_B(amaf_directions(channels.G_svd, k), powers), surface
        case Strategy.ND_MMSE_U:
            L = mmse_matrix(channels.H, scenario.delta_tx)
            surface = phi_mmse_nondiag(L, channels.G_svd, k)
            return _uniform_feeder(channels, scenario), surface
    raise InvalidArgumentError(f"unknown strategy {strategy!r}")


def evaluate(scenario: Scenario, channels: ChannelSet | None = None) -> RateReport:
    """Configure `scenario.strategy` and report its rates."""
    channels = channels if channels is not None else build_channels(scenario)
    beams, surface = configure(scenario.strategy, scenario, channels)
    end_to_end = effective_channel(channels.H, surface, channels.G)
    noise = noise_power(scenario.noise_psd_dbm_hz, scenario.bandwidth_hz)
    notes: list[str] = []
    if scenario.strategy is Strategy.ND_EIG_W:
        rates = cooperative_rates(channels.H_svd.left, end_to_end, beams, noise)
        cooperative = True
    else:
        rates = per_ue_sinr_rates(end_to_end, beams, noise)
        cooperative = False
    if scenario.strategy is Strategy.ND_MMSE_U:
        notes.append(PASSIVITY_NOTE)
    return build_report(
        rates,
        scenario.strategy,
        scenario.digest(),
        cooperative=cooperative,
        notes=notes,
    )


@dataclass(frozen=True)
class MonteCarloSummary:
    """Trial statistics of one (K, strategy) cell."""

    k: int
    mean_rate: float
    rate_var: float
    rate_std: float
    mean_sum_rate: float
    mean_jain: float
    trials: int


@dataclass(frozen=True)
class StudyRow:
    sweep: dict[str, float]
    strategy: Strategy
    report: RateReport | None = None
    summary: MonteCarloSummary | None = None


@dataclass(frozen=True)
class StudyResult:
    study_tag: StudyName
    rows: tuple[StudyRow, ...]
    seed: int = 0

    @property
    def strategies(self) -> list[Strategy]:
        return list(dict.fromkeys(row.strategy for row in self.rows))

    def for_strategy(self, strategy: Strategy) -> list[StudyRow]:
        return [row for row in self.rows if row.strategy is strategy]

    @classmethod
    def concat(cls, study_tag: StudyName, parts: Iterable["StudyResult"]) -> "StudyResult":
        parts = list(parts)
        rows = tuple(row for part in parts for row in part.rows)
        seed = parts[0].seed if parts else 0
        return cls(study_tag=study_tag, rows=rows, seed=seed)


def two_ue_ring(
    scenario: Scenario, distance: float, reference_deg: float, delta_phi_deg: float
) -> Scenario:
    """UE1 at `reference_deg`, UE2 at `reference_deg + delta_phi_deg`, both at `distance`."""
    azimuths = np.deg2rad([reference_deg, reference_deg + delta_phi_deg])
    return scenario.with_ues(place_ue_ring(distance, azimuths, center=scenario.tris_center))


def _evaluate_all(
    scenario: Scenario, strategies: Sequence[Strategy], feeder: Feeder
) -> list[RateReport]:
    channels = build_channels(scenario, feeder)
    return [evaluate(scenario.with_strategy(s), channels) for s in strategies]


def _check_strategies(strategies: Sequence[Strategy]) -> None:
    if not strategies:
        raise InvalidArgumentError("at least one strategy is required")


def run_single(scenario: Scenario, strategies: Sequence[Strategy]) -> StudyResult:
    _check_strategies(strategies)
    reports = _evaluate_all(scenario, strategies, build_feeder(scenario))
    rows = tuple(
        StudyRow(sweep={}, strategy=s, report=r) for s, r in zip(strategies, reports)
    )
    return StudyResult(study_tag=StudyName.SINGLE, rows=rows, seed=scenario.seed)


def run_angular_sweep(
    base: Scenario,
    d: float,
    delta_phis: Sequence[float],
    strategies: Sequence[Strategy],
    *,
    reference_deg: float = 60.0,
    progress: ProgressCallback | None = None,
) -> StudyResult:
    """Two UEs at radius `d`; UE2 moves away from UE1 by each Δφ (degrees)."""
    _check_strategies(strategies)
    if not d > 0:
        raise InvalidArgumentError(f"distance must be positive, got {d}")
    feeder = build_feeder(base)
    rows: list[StudyRow] = []
    for delta_phi in delta_phis:
        scenario = two_ue_ring(base, d, reference_deg, delta_phi)
        for s, report in zip(strategies, _evaluate_all(scenario, strategies, feeder)):
            sweep = {"delta_phi_deg": float(delta_phi)}
            rows.append(StudyRow(sweep=sweep, strategy=s, report=report))
        if progress is not None:
            progress(1)
    return StudyResult(study_tag=StudyName.ANGULAR, rows=tuple(rows), seed=base.seed)


def run_distance_sweep(
    base: Scenario,
    distances: Sequence[float],
    delta_phi: float,
    strategies: Sequence[Strategy],
    *,
    reference_deg: float = 60.0,
    study_tag: StudyName = StudyName.DISTANCE,
    progress: ProgressCallback | None = None,
) -> StudyResult:
    """Both UEs moved radially over `distances` at a fixed separation Δφ."""
    _check_strategies(strategies)
    feeder = build_feeder(base)
    rows: list[StudyRow] = []
    for d in distances:
        if not d > 0:
            raise InvalidArgumentError(f"distance must be positive, got {d}")
        scenario = two_ue_ring(base, d, reference_deg, delta_phi)
        sweep = {"distance_m": float(d), "delta_phi_deg": float(delta_phi)}
        for s, report in zip(strategies, _evaluate_all(scenario, strategies, feeder)):
            rows.append(StudyRow(sweep=dict(sweep), strategy=s, report=report))
        if progress is not None:
            progress(1)
    return StudyResult(study_tag=study_tag, rows=tuple(rows), seed=base.seed)


def run_power_allocation_study(
    base: Scenario,
    distances: Sequence[float],
    delta_phis: Sequence[float],
    *,
    strategies: Sequence[Strategy] = POWER_ALLOC_STRATEGIES,
    reference_deg: float = 60.0,
    progress: ProgressCallback | None = None,
) -> StudyResult:
    """Uniform vs waterfilling focusing over the distance grid, per Δφ."""
    parts = [
        run_distance_sweep(
            base,
            distances,
            delta_phi,
            strategies,
            reference_deg=reference_deg,
            study_tag=StudyName.POWER_ALLOC,
            progress=progress,
        )
        for delta_phi in delta_phis
    ]
    return StudyResult.concat(StudyName.POWER_ALLOC, parts)


def trial_generator(seed: int, k: int, trial: int) -> Generator:
    """Independent Philox stream keyed by (seed, K, trial)."""
    return Generator(Philox(SeedSequence([seed, k, trial])))


def sample_ue_positions(
    rng: Generator,
    k: int,
    d_range: tuple[float, float],
    phi_range_deg: tuple[float, float],
    center: Sequence[float],
) -> FloatArray:
    """K UEs uniform in radius and in azimuth, at the height of `center`."""
    radius = rng.uniform(d_range[0], d_range[1], size=k)
    azimuth = np.deg2rad(rng.uniform(phi_range_deg[0], phi_range_deg[1], size=k))
    offsets = np.stack(
        [radius * np.cos(azimuth), radius * np.sin(azimuth), np.zeros(k)], axis=1
    )
    return np.asarray(center, dtype=np.float64)[None, :] + offsets


def _summarize(k: int, rates: FloatArray) -> MonteCarloSummary:
    """`rates` is trials x K, rows in ascending trial order."""
    per_trial_jain = [jain_index(row)[0] for row in rates]
    variance = float(np.var(rates))
    return MonteCarloSummary(
        k=k,
        mean_rate=float(np.mean(rates)),
        rate_var=variance,
        rate_std=math.sqrt(variance),
        mean_sum_rate=float(np.mean(rates.sum(axis=1))),
        mean_jain=float(np.mean(per_trial_jain)),
        trials=int(rates.shape[0]),
    )


def run_scalability_mc(
    base: Scenario,
    k_values: Sequence[int],
    n_trials: int,
    d_range: tuple[float, float],
    phi_range: tuple[float, float],
    strategies: Sequence[Strategy],
    *,
    workers: int = 1,
    progress: ProgressCallback | None = None,
) -> StudyResult:
    """Monte Carlo over random UE drops for every K.

    Trials run on up to `workers` threads; results are gathered in ascending
    trial order, so the output does not depend on scheduling.
    """
    _check_strategies(strategies)
    if n_trials < 1:
        raise InvalidArgumentError(f"need at least one trial, got {n_trials}")
    if not 0 < d_range[0] <= d_range[1]:
        raise InvalidArgumentError(f"invalid distance range {d_range}")
    # G depends only on the arrays, so every trial reuses one decomposition
    feeder = build_feeder(base)

    def one_trial(k: int, trial: int) -> list[RateReport]:
        # own stream per (seed, K, trial): results do not depend on scheduling
        rng = trial_generator(base.seed, k, trial)
        positions = sample_ue_positions(rng, k, d_range, phi_range, base.tris_center)
        return _evaluate_all(base.with_ues(positions), strategies, feeder)

    rows: list[StudyRow] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for k in k_values:
            per_strategy: list[list[tuple[float, ...]]] = [[] for _ in strategies]
            # map yields in submission order, i.e. ascending trial index
            for reports in pool.map(partial(one_trial, k), range(n_trials)):
                for i, report in enumerate(reports):
                    per_strategy[i].append(report.per_ue_rates)
                if progress is not None:
                    progress(1)
            for s, trials in zip(strategies, per_strategy):
                summary = _summarize(k, np.asarray(trials, dtype=np.float64))
                rows.append(StudyRow(sweep={"k": float(k)}, strategy=s, summary=summary))
    return StudyResult(study_tag=StudyName.SCALABILITY, rows=tuple(rows), seed=base.seed)
