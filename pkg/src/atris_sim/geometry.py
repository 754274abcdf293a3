"""Planar array geometry, UE placement and spherical offsets.

Angle convention used everywhere: the polar angle theta is measured from +z,
the azimuth phi from +x in the xy-plane, phi in (-pi, pi]. Surfaces and the
feeder radiate towards +y, i.e. broadside is (theta, phi) = (90°, 90°).
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from atris_sim.errors import DegenerateGeometryError, InvalidArgumentError

FloatArray = NDArray[np.float64]
Axis = Literal["x", "y", "z"]
Regime = Literal["near-field", "far-field"]

_UNIT = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}
# (column axis, row axis) spanning the plane orthogonal to each normal
_PLANE_AXES: dict[str, tuple[str, str]] = {"y": ("x", "z"), "z": ("x", "y"), "x": ("y", "z")}


def vec3(point: ArrayLike) -> FloatArray:
    """Coerce `point` to a finite float64 vector of length 3."""
    arr = np.asarray(point, dtype=np.float64)
    if arr.shape != (3,):
        raise InvalidArgumentError(f"expected a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"non-finite coordinates: {arr.tolist()}")
    return arr


def _frozen(arr: NDArray[np.generic]) -> NDArray[np.generic]:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ElementGrid:
    """Positions and aperture metadata of a planar rows x cols array.

    Elements are stored row-major: index = row * cols + col, with columns
    running along the first in-plane axis (x for a +y normal) and rows along
    the second (z for a +y normal).
    """

    positions: FloatArray
    rows: int
    cols: int
    spacing: float
    normal: FloatArray
    center: FloatArray
    label: str = "grid"
    # nominal aperture diagonal: sqrt(rows² + cols²) * spacing
    diagonal_length: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "diagonal_length", float(np.hypot(self.rows, self.cols) * self.spacing)
        )
        _frozen(self.positions)
        _frozen(self.normal)
        _frozen(self.center)

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def column_index(self) -> NDArray[np.int64]:
        return np.arange(self.size, dtype=np.int64) % self.cols


@dataclass(frozen=True)
class SphericalOffset:
    """Distance and angles of a target as seen from an origin."""

    distance: float
    azimuth: float
    polar: float


def build_upa(
    rows: int,
    cols: int,
    spacing: float,
    center: ArrayLike = (0.0, 0.0, 0.0),
    normal_axis: Axis = "y",
    label: str = "grid",
) -> ElementGrid:
    """Build a uniform planar array centered at `center`, orthogonal to `normal_axis`."""
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"grid dimensions must be positive, got {rows}x{cols}")
    if not spacing > 0:
        raise InvalidArgumentError(f"spacing must be positive, got {spacing}")
    if normal_axis not in _PLANE_AXES:
        raise InvalidArgumentError(f"unknown normal axis {normal_axis!r}")
    origin = vec3(center)
    col_axis, row_axis = (_UNIT[a] for a in _PLANE_AXES[normal_axis])

    col_offsets = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    row_offsets = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    rr, cc = np.meshgrid(row_offsets, col_offsets, indexing="ij")
    positions = (
        origin[None, :]
        + cc.reshape(-1, 1) * col_axis[None, :]
        + rr.reshape(-1, 1) * row_axis[None, :]
    )
    return ElementGrid(
        positions=np.ascontiguousarray(positions),
        rows=rows,
        cols=cols,
        spacing=float(spacing),
        normal=_UNIT[normal_axis].copy(),
        center=origin.copy(),
        label=label,
    )


def place_ue_ring(
    radius: float, azimuths: Sequence[float], center: ArrayLike = (0.0, 0.0, 0.0)
) -> FloatArray:
    """Place one UE per azimuth (radians) on a horizontal ring around `center`."""
    if not radius > 0:
        raise InvalidArgumentError(f"ring radius must be positive, got {radius}")
    origin = vec3(center)
    phi = np.asarray(azimuths, dtype=np.float64).reshape(-1)
    ring = np.stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=1)
    return origin[None, :] + radius * ring


def local_frame(boresight: ArrayLike) -> FloatArray:
    """Rows (x, y, z) of a right-handed frame whose +y axis is `boresight`.

    The local z axis stays as close to global +z as possible (no roll), so a
    +y boresight yields the global frame.
    """
    y_axis = np.asarray(boresight, dtype=np.float64)
    norm = np.linalg.norm(y_axis)
    if norm == 0:
        raise DegenerateGeometryError("boresight direction has zero length")
    y_axis = y_axis / norm
    up = _UNIT["z"] if abs(y_axis[2]) < 1.0 - 1e-12 else _UNIT["x"]
    z_axis = up - np.dot(up, y_axis) * y_axis
    z_axis /= np.linalg.norm(z_axis)
    x_axis = np.cross(y_axis, z_axis)
    return np.stack([x_axis, y_axis, z_axis])


def spherical_components(
    diff: FloatArray, frame: FloatArray | None = None
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Vectorized (distance, azimuth, polar) of displacement vectors `diff[..., 3]`.

    `frame` is either one (3, 3) frame or one frame per leading index of
    `diff` (shape (..., 3, 3) broadcastable against `diff`).
    """
    local = diff if frame is None else np.einsum("...ij,...j->...i", frame, diff)
    distance = np.linalg.norm(local, axis=-1)
    if np.any(distance == 0):
        raise DegenerateGeometryError("coincident points (zero distance)")
    polar = np.arccos(np.clip(local[..., 2] / distance, -1.0, 1.0))
    azimuth = np.arctan2(local[..., 1], local[..., 0])
    azimuth = np.where(azimuth <= -np.pi, np.pi, azimuth)
    return distance, azimuth, polar


def relative_spherical(
    origin: ArrayLike, target: ArrayLike, frame_normal: ArrayLike = (0.0, 1.0, 0.0)
) -> SphericalOffset:
    """Offset of `target` seen from `origin` in the frame whose boresight is `frame_normal`."""
    diff = vec3(target) - vec3(origin)
    distance, azimuth, polar = spherical_components(diff, local_frame(frame_normal))
    return SphericalOffset(float(distance), float(azimuth), float(polar))


def azimuth_about(points: ArrayLike, center: ArrayLike) -> FloatArray:
    """Azimuth (radians) of each point around `center`, measured in the xy-plane."""
    diff = np.atleast_2d(np.asarray(points, dtype=np.float64)) - vec3(center)[None, :]
    return np.arctan2(diff[:, 1], diff[:, 0])


def aperture_fraunhofer_distance(aperture: float, wavelength: float) -> float:
    """2 L² / λ for an aperture of largest dimension L."""
    if not wavelength > 0:
        raise InvalidArgumentError(f"wavelength must be positive, got {wavelength}")
    return 2.0 * aperture**2 / wavelength


def fraunhofer_distance(grid: ElementGrid, wavelength: float) -> float:
    """Fraunhofer distance of `grid` using its nominal aperture diagonal."""
    return aperture_fraunhofer_distance(grid.diagonal_length, wavelength)


def propagation_regime(distance: float, d_ff: float) -> Regime:
    return "near-field" if distance < d_ff else "far-field"
