"""Noise power, Shannon rates and Jain fairness."""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from atris_sim.channel import ComplexArray, EffectiveChannel
from atris_sim.errors import InvalidArgumentError, NumericalError
from atris_sim.models import Strategy
from atris_sim.precoding import BeamformerSet

FloatArray = NDArray[np.float64]

PASSIVITY_NOTE = "surface normalized in Frobenius norm only (not element-wise passive)"
DEGENERATE_JAIN_NOTE = "all rates zero; Jain index reported as 1"


def noise_power(psd_dbm_per_hz: float, bandwidth_hz: float) -> float:
    """Noise PSD integrated over the bandwidth, in watts."""
    if not bandwidth_hz > 0:
        raise InvalidArgumentError(f"bandwidth must be positive, got {bandwidth_hz}")
    return float(10.0 ** ((psd_dbm_per_hz + 10.0 * math.log10(bandwidth_hz) - 30.0) / 10.0))


def _received(H_E: EffectiveChannel | ArrayLike, B: BeamformerSet) -> ComplexArray:
    raw = H_E.entries if isinstance(H_E, EffectiveChannel) else H_E
    h = np.asarray(raw, dtype=np.complex128)
    b = B.matrix
    if h.ndim != 2 or h.shape[1] != b.shape[0] or h.shape[0] != b.shape[1]:
        raise InvalidArgumentError(
            f"effective channel {h.shape} does not match beamformer {b.shape}"
        )
    if not np.all(np.isfinite(h)):
        raise NumericalError("effective channel has non-finite entries")
    return h @ b


def _check_noise(noise: float) -> None:
    if not noise > 0:
        raise InvalidArgumentError(f"noise power must be positive, got {noise}")


def per_ue_sinr_rates(
    H_E: EffectiveChannel | ArrayLike, B: BeamformerSet, noise: float
) -> FloatArray:
    """γ_k = log2(1 + |h̄_k b_k|² / (σ² + Σ_{i≠k} |h̄_k b_i|²))."""
    _check_noise(noise)
    power = np.abs(_received(H_E, B)) ** 2
    signal = np.diag(power).copy()
    np.fill_diagonal(power, 0.0)
    interference = power.sum(axis=1)
    return np.log2(1.0 + signal / (noise + interference))


def cooperative_rates(
    P: ArrayLike, H_E: EffectiveChannel | ArrayLike, B: BeamformerSet, noise: float
) -> FloatArray:
    """γ_k = log2(1 + |p_k^H H_E b_k|² / σ²) after joint receive combining."""
    _check_noise(noise)
    combiners = np.asarray(P, dtype=np.complex128)
    received = _received(H_E, B)
    if combiners.ndim != 2 or combiners.shape[0] != received.shape[0]:
        raise InvalidArgumentError(
            f"combiners {combiners.shape} do not match {received.shape[0]} UEs"
        )
    k = received.shape[1]
    if combiners.shape[1] < k:
        raise InvalidArgumentError(f"need {k} combiners, got {combiners.shape[1]}")
    combined = combiners[:, :k].conj().T @ received
    return np.log2(1.0 + np.abs(np.diag(combined)) ** 2 / noise)


def jain_index(rates: ArrayLike) -> tuple[float, bool]:
    """(Σγ)² / (K Σγ²) and whether the all-zero convention was applied."""
    values = np.asarray(rates, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise InvalidArgumentError("Jain index needs at least one rate")
    squares = math.fsum(values**2)
    if squares == 0:
        return 1.0, True
    total = math.fsum(values)
    return total * total / (values.size * squares), False


@dataclass(frozen=True)
class RateReport:
    """Rates of one configuration evaluation, with provenance."""

    per_ue_rates: tuple[float, ...]
    sum_rate: float
    jain: float
    strategy: Strategy
    scenario_digest: str
    jain_degenerate: bool = False
    cooperative: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def k(self) -> int:
        return len(self.per_ue_rates)


def build_report(
    rates: Sequence[float] | FloatArray,
    strategy: Strategy,
    scenario_digest: str,
    *,
    cooperative: bool = False,
    notes: Sequence[str] = (),
) -> RateReport:
    values = tuple(float(r) for r in np.asarray(rates, dtype=np.float64).reshape(-1))
    if any(not math.isfinite(r) or r < 0 for r in values):
        raise NumericalError(f"invalid rates {values}")
    jain, degenerate = jain_index(values)
    all_notes = list(notes)
    if degenerate:
        all_notes.append(DEGENERATE_JAIN_NOTE)
    return RateReport(
        per_ue_rates=values,
        sum_rate=math.fsum(values),
        jain=jain,
        strategy=strategy,
        scenario_digest=scenario_digest,
        jain_degenerate=degenerate,
        cooperative=cooperative,
        notes=tuple(all_notes),
    )
