"""Line-of-sight spherical-wavefront channels and their canonical SVDs.

Every coefficient follows the free-space model

    c = λ / (4π d) * sqrt(gain) * exp(-j 2π d / λ)

with the exact element-to-element distance d, so near- and far-field
behaviour both fall out of the same expression.
"""

from dataclasses import dataclass
from enum import StrEnum
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from atris_sim.errors import DegenerateGeometryError, InvalidArgumentError, NumericalError
from atris_sim.geometry import local_frame, spherical_components, vec3

ComplexArray = NDArray[np.complex128]


class GainModel(StrEnum):
    """Which end of the link carries the directive element pattern."""

    TX_FRAME = "tx-frame"
    RX_FRAME = "rx-frame"


def element_gain(theta: ArrayLike, phi: ArrayLike) -> NDArray[np.float64]:
    """Patch pattern 2 sin(theta) sin(phi), clamped to zero behind the element."""
    gain = 2.0 * np.sin(theta) * np.sin(phi)
    return np.maximum(gain, 0.0)


def los_coefficient(tx: ArrayLike, rx: ArrayLike, wavelength: float, gain: float) -> complex:
    if not wavelength > 0:
        raise InvalidArgumentError(f"wavelength must be positive, got {wavelength}")
    distance = float(np.linalg.norm(vec3(rx) - vec3(tx)))
    if distance == 0:
        raise DegenerateGeometryError("transmitter and receiver coincide")
    amplitude = wavelength / (4.0 * np.pi * distance) * np.sqrt(gain)
    return complex(amplitude * np.exp(-2j * np.pi * distance / wavelength))


def _freeze(arr: ComplexArray) -> ComplexArray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Dense rx-by-tx matrix of complex amplitude gains."""

    entries: ComplexArray
    tx_grid_id: str
    rx_grid_id: str
    wavelength: float

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.entries)):
            raise NumericalError(
                f"channel {self.tx_grid_id}->{self.rx_grid_id} has non-finite entries"
            )
        _freeze(self.entries)

    @property
    def shape(self) -> tuple[int, int]:
        rows, cols = self.entries.shape
        return rows, cols


@dataclass(frozen=True, eq=False)
class CanonicalSvd:
    """Thin SVD M = left @ diag(singular_values) @ right^H with fixed phases.

    For every left singular vector the largest-magnitude entry (lowest index on
    ties) is real and non-negative; the matching right vector is co-rotated.
    """

    left: ComplexArray
    singular_values: NDArray[np.float64]
    right: ComplexArray
    rank_used: int

    def reconstruct(self) -> ComplexArray:
        return (self.left * self.singular_values[None, :]) @ self.right.conj().T


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """End-to-end K x N_T channel H Φ G."""

    entries: ComplexArray

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.entries)):
            raise NumericalError("effective channel has non-finite entries")
        _freeze(self.entries)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Feeder channel G (N x N_T), user channel H (K x N) and their canonical SVDs."""

    G: ChannelMatrix
    H: ChannelMatrix
    G_svd: CanonicalSvd
    H_svd: CanonicalSvd


class SurfaceTransform(Protocol):
    """Anything that can stand between H and G in the cascade H Φ G."""

    @property
    def size(self) -> int: ...

    def cascade(self, h: ComplexArray, g: ComplexArray) -> ComplexArray: ...


def build_channel_matrix(
    tx_points: ArrayLike,
    rx_points: ArrayLike,
    wavelength: float,
    gain_model: GainModel,
    *,
    tx_normal: ArrayLike = (0.0, 1.0, 0.0),
    tx_grid_id: str = "tx",
    rx_grid_id: str = "rx",
) -> ChannelMatrix:
    """Entry (r, t) is the LOS coefficient from tx_points[t] to rx_points[r].

    TX_FRAME evaluates the element pattern at the departure angle in the
    transmit array frame (boresight `tx_normal`). RX_FRAME evaluates it at the
    arrival angle in each receiver's own frame, whose boresight points at the
    centroid of the transmit points.
    """
    if not wavelength > 0:
        raise InvalidArgumentError(f"wavelength must be positive, got {wavelength}")
    tx = np.atleast_2d(np.asarray(tx_points, dtype=np.float64))
    rx = np.atleast_2d(np.asarray(rx_points, dtype=np.float64))
    if tx.shape[0] == 0 or rx.shape[0] == 0:
        raise InvalidArgumentError("channel endpoints must be non-empty point sets")

    departure = rx[:, None, :] - tx[None, :, :]
    if gain_model is GainModel.TX_FRAME:
        distance, azimuth, polar = spherical_components(departure, local_frame(tx_normal))
    elif gain_model is GainModel.RX_FRAME:
        aim = tx.mean(axis=0)
        frames = np.stack([local_frame(aim - point) for point in rx])
        distance, azimuth, polar = spherical_components(-departure, frames[:, None, :, :])
    else:
        raise InvalidArgumentError(f"unknown gain model {gain_model!r}")

    amplitude = wavelength / (4.0 * np.pi * distance) * np.sqrt(element_gain(polar, azimuth))
    entries = amplitude * np.exp(-2j * np.pi * distance / wavelength)
    return ChannelMatrix(
        entries=np.ascontiguousarray(entries, dtype=np.complex128),
        tx_grid_id=tx_grid_id,
        rx_grid_id=rx_grid_id,
        wavelength=float(wavelength),
    )


def _condition_hint(matrix: ComplexArray) -> str:
    try:
        return f"cond≈{np.linalg.cond(matrix):.3e}"
    except np.linalg.LinAlgError:
        return "cond unavailable"


def svd_canonical(matrix: ChannelMatrix | ArrayLike) -> CanonicalSvd:
    """Thin SVD with the phase normalization described on `CanonicalSvd`."""
    raw = matrix.entries if isinstance(matrix, ChannelMatrix) else matrix
    a = np.asarray(raw, dtype=np.complex128)
    if a.ndim != 2:
        raise InvalidArgumentError(f"SVD expects a matrix, got {a.ndim} dimensions")
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"cannot decompose a {a.shape} matrix with non-finite entries")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"SVD did not converge for a {a.shape} matrix ({_condition_hint(a)})"
        ) from exc

    v = vh.conj().T
    columns = np.arange(s.size)
    pivot_rows = np.argmax(np.abs(u), axis=0)
    pivots = u[pivot_rows, columns]
    magnitude = np.abs(pivots)
    rotation = np.ones_like(pivots)
    nonzero = magnitude > 0
    rotation[nonzero] = pivots[nonzero] / magnitude[nonzero]
    u = u * rotation.conj()[None, :]
    v = v * rotation.conj()[None, :]
    u[pivot_rows, columns] = magnitude

    tolerance = (s[0] if s.size else 0.0) * max(a.shape) * np.finfo(np.float64).eps
    return CanonicalSvd(
        left=_freeze(np.ascontiguousarray(u)),
        singular_values=s,
        right=_freeze(np.ascontiguousarray(v)),
        rank_used=int(np.count_nonzero(s > tolerance)),
    )


def effective_channel(
    H: ChannelMatrix, surface: SurfaceTransform, G: ChannelMatrix
) -> EffectiveChannel:
    """H Φ G for any surface form; implicit forms never materialize Φ."""
    _, n_h = H.shape
    n_g, _ = G.shape
    if n_h != n_g or surface.size != n_h:
        raise InvalidArgumentError(
            f"dimension mismatch: H is {H.shape}, surface has {surface.size} elements, "
            f"G is {G.shape}"
        )
    return EffectiveChannel(surface.cascade(H.entries, G.entries))
