"""AMAF beamforming: singular-vector directions plus power allocation."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from atris_sim.channel import CanonicalSvd, ComplexArray
from atris_sim.errors import InfeasibleAllocationError, InvalidArgumentError

FloatArray = NDArray[np.float64]

_UNIT_NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BeamformerSet:
    """Unit-norm feeder directions (N_T x K) and per-stream powers (watts)."""

    directions: ComplexArray
    powers: FloatArray
    total_power: float

    @property
    def matrix(self) -> ComplexArray:
        """B = directions @ diag(sqrt(powers))."""
        return self.directions * np.sqrt(self.powers)[None, :]

    @property
    def streams(self) -> int:
        return int(self.powers.size)


def amaf_directions(G_svd: CanonicalSvd, K: int) -> ComplexArray:
    """First K canonical right singular vectors of the feeder channel."""
    if K < 1:
        raise InvalidArgumentError(f"need at least one stream, got K={K}")
    if K > G_svd.rank_used:
        raise InvalidArgumentError(
            f"K={K} exceeds the feeder channel rank {G_svd.rank_used}"
        )
    return np.ascontiguousarray(G_svd.right[:, :K])


def allocate_uniform(P_T: float, K: int) -> FloatArray:
    if not P_T > 0:
        raise InvalidArgumentError(f"total power must be positive, got {P_T}")
    if K < 1:
        raise InvalidArgumentError(f"need at least one stream, got K={K}")
    return np.full(K, P_T / K, dtype=np.float64)


def solve_water_level(
    channel_gains_sq: ArrayLike, noise_power: float, P_T: float
) -> tuple[float, FloatArray]:
    """Water level and powers by the sorted active-set method.

    Floors sigma²/g² are sorted ascending (stable, so ties keep the original
    index order); the active set is the largest prefix whose common level
    stays strictly above its highest floor. Zero gains never become active.
    """
    gains = np.asarray(channel_gains_sq, dtype=np.float64).reshape(-1)
    if not P_T > 0:
        raise InvalidArgumentError(f"total power must be positive, got {P_T}")
    if not noise_power > 0:
        raise InvalidArgumentError(f"noise power must be positive, got {noise_power}")
    if gains.size == 0 or np.any(gains < 0) or not np.all(np.isfinite(gains)):
        raise InvalidArgumentError("channel gains must be finite and non-negative")
    # zero-gain modes stay at zero power
    usable = np.flatnonzero(gains > 0)
    if usable.size == 0:
        raise InfeasibleAllocationError("every channel gain is zero")

    floors = noise_power / gains[usable]
    order = np.argsort(floors, kind="stable")
    sorted_floors = floors[order]
    # offsets relative to the lowest floor keep equal floors exactly equal
    base = sorted_floors[0]
    excess = sorted_floors - base

    # shrink the active set from the top until the level clears its highest floor
    active = 1
    for m in range(sorted_floors.size, 0, -1):
        level_excess = (P_T + excess[:m].sum()) / m
        if level_excess > excess[m - 1]:
            active = m
            break

    # split before summing: equal floors then get bit-identical powers
    level_excess = P_T / active + excess[:active].sum() / active
    powers = np.zeros(gains.size, dtype=np.float64)
    chosen = usable[order[:active]]
    powers[chosen] = np.maximum(level_excess - excess[:active], 0.0)
    return float(base + level_excess), powers


def allocate_waterfilling(
    channel_gains_sq: ArrayLike, noise_power: float, P_T: float
) -> FloatArray:
    """P_k = max(0, mu - sigma²/g_k²) with sum P_k = P_T."""
    _, powers = solve_water_level(channel_gains_sq, noise_power, P_T)
    return powers


def assemble_B(directions: ArrayLike, powers: ArrayLike) -> BeamformerSet:
    dirs = np.asarray(directions, dtype=np.complex128)
    p = np.asarray(powers, dtype=np.float64).reshape(-1)
    if dirs.ndim != 2 or dirs.shape[1] != p.size:
        raise InvalidArgumentError(
            f"directions {dirs.shape} do not match {p.size} stream powers"
        )
    if np.any(p < 0):
        raise InvalidArgumentError(f"negative stream power in {p.tolist()}")
    norms = np.linalg.norm(dirs, axis=0)
    if np.any(np.abs(norms - 1.0) > _UNIT_NORM_TOL):
        raise InvalidArgumentError(f"beam directions must be unit norm, got {norms.tolist()}")
    return BeamformerSet(
        directions=np.ascontiguousarray(dirs), powers=p, total_power=float(np.sum(p))
    )
