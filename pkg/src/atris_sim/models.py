"""Pydantic models for run configuration and scenario validation.

The TOML configuration file maps one section onto each `*Section` model;
`RunConfig.scenario()` turns the validated sections into the immutable
`Scenario` that every study evaluates.
"""

import hashlib
from enum import StrEnum
from functools import lru_cache
from typing import Any, Self

import numpy as np
from numpy.typing import ArrayLike
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)
from scipy.constants import speed_of_light

from atris_sim.errors import InvalidArgumentError
from atris_sim.geometry import ElementGrid, build_upa, place_ue_ring

U64_MAX = 2**64 - 1


# scenarios with the same geometry share one (read-only) grid
@lru_cache(maxsize=32)
def _grid(
    rows: int, cols: int, spacing: float, center: tuple[float, float, float], label: str
) -> ElementGrid:
    return build_upa(rows, cols, spacing, center=center, label=label)


class Strategy(StrEnum):
    """Joint AMAF/T-RIS beamforming strategies."""

    D_FOC_U = "D-FOC-U"
    D_FOC_W = "D-FOC-W"
    D_MMSE_U = "D-MMSE-U"
    D_PEB_U = "D-PEB-U"
    ND_EIG_W = "ND-EIG-W"
    ND_MMSE_U = "ND-MMSE-U"

    @property
    def diagonal(self) -> bool:
        return self.value.startswith("D-")


class StudyName(StrEnum):
    ANGULAR = "angular"
    DISTANCE = "distance"
    POWER_ALLOC = "power-alloc"
    SCALABILITY = "scalability"
    SINGLE = "single"


class PebSteering(StrEnum):
    """Phase profile used inside each PEB sector."""

    NEAR_FIELD = "near-field"
    FAR_FIELD = "far-field"


ALL_STRATEGIES: tuple[Strategy, ...] = tuple(Strategy)
POWER_ALLOC_STRATEGIES: tuple[Strategy, ...] = (Strategy.D_FOC_U, Strategy.D_FOC_W)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ArraySpec(_Section):
    """Square-cell planar array, spacing given in wavelengths."""

    rows: int = Field(ge=1, le=512, description="Number of element rows")
    cols: int = Field(ge=1, le=512, description="Number of element columns")
    spacing_wavelengths: float = Field(
        default=0.5, gt=0, description="Element spacing in wavelengths"
    )

    @property
    def size(self) -> int:
        return self.rows * self.cols


class SystemSection(_Section):
    carrier_hz: float = Field(default=28e9, gt=0, description="Carrier frequency")
    bandwidth_hz: float = Field(default=120e6, gt=0, description="Signal bandwidth")
    total_power_w: float = Field(default=10e-3, gt=0, description="AMAF transmit power")
    noise_psd_dbm_hz: float = Field(default=-170.0, description="Noise PSD in dBm/Hz")
    delta_tx: float = Field(default=1e-8, gt=0, description="MMSE regularization")
    feed_offset_wavelengths: float = Field(
        default=8.0, gt=0, description="AMAF to T-RIS center distance in wavelengths"
    )


class UeSection(_Section):
    """UE ring used by the single-configuration study."""

    radius_m: float = Field(default=10.0, gt=0, description="Distance to the T-RIS center")
    azimuths_deg: list[float] = Field(
        default_factory=lambda: [60.0, 90.0], min_length=1, description="UE azimuths"
    )
    reference_azimuth_deg: float = Field(
        default=60.0, description="UE1 azimuth in the angular and distance sweeps"
    )


class RunSection(_Section):
    study: StudyName = StudyName.SINGLE
    strategies: list[Strategy] | None = Field(
        default=None, description="Strategies to evaluate (study default when unset)"
    )
    seed: int = Field(default=0, ge=0, le=U64_MAX)
    peb_steering: PebSteering = PebSteering.NEAR_FIELD
    eigenmode_explicit: bool = Field(
        default=False, description="Materialize the eigenmode surface (small surfaces only)"
    )

    @field_validator("strategies")
    @classmethod
    def validate_strategies(cls, v: list[Strategy] | None) -> list[Strategy] | None:
        if v is None:
            return None
        if not v:
            raise ValueError("at least one strategy is required")
        # keep first occurrence order
        return list(dict.fromkeys(v))

    def strategies_for(self, study: StudyName) -> list[Strategy]:
        if self.strategies is not None:
            return self.strategies
        if study is StudyName.POWER_ALLOC:
            return list(POWER_ALLOC_STRATEGIES)
        return list(ALL_STRATEGIES)


class AngularSection(_Section):
    distance_m: float = Field(default=10.0, gt=0)
    delta_phi_deg: list[float] = Field(
        default_factory=lambda: [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0], min_length=1
    )


class DistanceSection(_Section):
    distances_m: list[float] = Field(
        default_factory=lambda: [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0], min_length=1
    )
    delta_phi_deg: list[float] = Field(default_factory=lambda: [0.0, 30.0], min_length=1)

    @field_validator("distances_m")
    @classmethod
    def validate_distances(cls, v: list[float]) -> list[float]:
        if any(d <= 0 for d in v):
            raise ValueError("distances must be positive")
        return v


class ScalabilitySection(_Section):
    k_values: list[int] = Field(default_factory=lambda: list(range(2, 17)), min_length=1)
    trials: int = Field(default=1000, ge=1)
    distance_range_m: tuple[float, float] = (5.0, 30.0)
    azimuth_range_deg: tuple[float, float] = (30.0, 150.0)

    @field_validator("k_values")
    @classmethod
    def validate_k_values(cls, v: list[int]) -> list[int]:
        if any(k < 1 for k in v):
            raise ValueError("every K must be at least 1")
        return v

    @model_validator(mode="after")
    def validate_ranges(self) -> Self:
        low, high = self.distance_range_m
        if not 0 < low <= high:
            raise ValueError("distance_range_m must satisfy 0 < low <= high")
        a_low, a_high = self.azimuth_range_deg
        if a_low > a_high:
            raise ValueError("azimuth_range_deg must satisfy low <= high")
        return self


class Scenario(BaseModel):
    """Complete, immutable description of one evaluation."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    carrier_hz: float = Field(default=28e9, gt=0)
    bandwidth_hz: float = Field(default=120e6, gt=0)
    total_power_w: float = Field(default=10e-3, gt=0)
    noise_psd_dbm_hz: float = -170.0
    amaf: ArraySpec = Field(default_factory=lambda: ArraySpec(rows=4, cols=4))
    tris: ArraySpec = Field(default_factory=lambda: ArraySpec(rows=50, cols=50))
    feed_offset_wavelengths: float = Field(default=8.0, gt=0)
    ue_positions: tuple[tuple[float, float, float], ...] = Field(min_length=1)
    strategy: Strategy = Strategy.D_FOC_U
    delta_tx: float = Field(default=1e-8, gt=0)
    seed: int = Field(default=0, ge=0, le=U64_MAX)
    peb_steering: PebSteering = PebSteering.NEAR_FIELD
    eigenmode_explicit: bool = False

    @field_validator("ue_positions")
    @classmethod
    def validate_positions(
        cls, v: tuple[tuple[float, float, float], ...]
    ) -> tuple[tuple[float, float, float], ...]:
        if not np.all(np.isfinite(np.asarray(v, dtype=np.float64))):
            raise ValueError("UE coordinates must be finite")
        return v

    @model_validator(mode="after")
    def validate_stream_count(self) -> Self:
        k = len(self.ue_positions)
        if self.strategy is Strategy.D_PEB_U:
            if k > self.tris.cols:
                raise ValueError(
                    f"{k} UEs need {k} sectors but the surface has {self.tris.cols} columns"
                )
        elif k > self.amaf.size:
            raise ValueError(
                f"{self.strategy} serves at most N_T={self.amaf.size} UEs, got {k}"
            )
        return self

    @property
    def k(self) -> int:
        return len(self.ue_positions)

    @property
    def wavelength(self) -> float:
        return float(speed_of_light / self.carrier_hz)

    @property
    def tris_center(self) -> tuple[float, float, float]:
        return (0.0, self.feed_offset_wavelengths * self.wavelength, 0.0)

    @property
    def amaf_grid(self) -> ElementGrid:
        """Feeder UPA at the origin, radiating towards +y."""
        return _grid(
            self.amaf.rows,
            self.amaf.cols,
            self.amaf.spacing_wavelengths * self.wavelength,
            (0.0, 0.0, 0.0),
            "amaf",
        )

    @property
    def tris_grid(self) -> ElementGrid:
        return _grid(
            self.tris.rows,
            self.tris.cols,
            self.tris.spacing_wavelengths * self.wavelength,
            self.tris_center,
            "tris",
        )

    def digest(self) -> str:
        """Short sha256 of the canonical JSON dump."""
        payload = self.model_dump_json().encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]

    @classmethod
    def build(cls, data: dict[str, Any]) -> "Scenario":
        """Validate `data`, reporting failures as `InvalidArgumentError`."""
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            error = exc.errors()[0]
            key = ".".join(str(part) for part in error["loc"]) or "scenario"
            raise InvalidArgumentError(f"{key}: {error['msg']}") from exc

    def with_ues(self, positions: ArrayLike) -> "Scenario":
        rows = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        return self.build(
            self.model_dump() | {"ue_positions": tuple(tuple(map(float, p)) for p in rows)}
        )

    def with_strategy(self, strategy: Strategy) -> "Scenario":
        return self.build(self.model_dump() | {"strategy": strategy})


class RunConfig(BaseModel):
    """Parsed configuration file plus overrides."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    system: SystemSection = Field(default_factory=SystemSection)
    amaf: ArraySpec = Field(default_factory=lambda: ArraySpec(rows=4, cols=4))
    tris: ArraySpec = Field(default_factory=lambda: ArraySpec(rows=50, cols=50))
    ue: UeSection = Field(default_factory=UeSection)
    run: RunSection = Field(default_factory=RunSection)
    angular: AngularSection = Field(default_factory=AngularSection)
    distance: DistanceSection = Field(default_factory=DistanceSection)
    scalability: ScalabilitySection = Field(default_factory=ScalabilitySection)

    def scenario(self) -> Scenario:
        """Scenario for the configured UE ring and first strategy."""
        wavelength = speed_of_light / self.system.carrier_hz
        center = (0.0, self.system.feed_offset_wavelengths * wavelength, 0.0)
        positions = place_ue_ring(
            self.ue.radius_m, np.deg2rad(self.ue.azimuths_deg), center=center
        )
        return Scenario.build(
            {
                "carrier_hz": self.system.carrier_hz,
                "bandwidth_hz": self.system.bandwidth_hz,
                "total_power_w": self.system.total_power_w,
                "noise_psd_dbm_hz": self.system.noise_psd_dbm_hz,
                "amaf": self.amaf,
                "tris": self.tris,
                "feed_offset_wavelengths": self.system.feed_offset_wavelengths,
                "ue_positions": tuple(tuple(map(float, p)) for p in positions),
                "strategy": self.run.strategies_for(self.run.study)[0],
                "delta_tx": self.system.delta_tx,
                "seed": self.run.seed,
                "peb_steering": self.run.peb_steering,
                "eigenmode_explicit": self.run.eigenmode_explicit,
            }
        )
