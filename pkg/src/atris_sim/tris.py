"""T-RIS transformations: diagonal engineered designs and non-diagonal benchmarks.

Every surface form implements `channel.SurfaceTransform`, so the cascade
H Φ G is evaluated without ever building a dense N x N matrix unless the
caller asks for it explicitly.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from atris_sim.channel import CanonicalSvd, ChannelMatrix, ComplexArray, svd_canonical
from atris_sim.errors import (
    DegenerateGeometryError,
    DegenerateSectorError,
    InvalidArgumentError,
    NumericalError,
)
from atris_sim.geometry import ElementGrid, azimuth_about, vec3
from atris_sim.models import PebSteering, Strategy

# Largest surface for which the eigenmode design may be materialized densely.
EXPLICIT_EIGENMODE_LIMIT = 64
UNIT_MODULUS_TOL = 1e-12


def _readonly(arr: ComplexArray) -> ComplexArray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiagonalSurface:
    """Φ = diag(phases) with unit-modulus phases."""

    phases: ComplexArray
    strategy: Strategy

    def __post_init__(self) -> None:
        if np.any(np.abs(np.abs(self.phases) - 1.0) > UNIT_MODULUS_TOL):
            raise NumericalError(f"{self.strategy} produced non unit-modulus phases")
        _readonly(self.phases)

    @property
    def size(self) -> int:
        return int(self.phases.size)

    def cascade(self, h: ComplexArray, g: ComplexArray) -> ComplexArray:
        return (h * self.phases[None, :]) @ g

    def dense(self) -> ComplexArray:
        return np.diag(self.phases)

    def phase_radians(self) -> NDArray[np.float64]:
        return np.angle(self.phases)


@dataclass(frozen=True, eq=False)
class DenseSurface:
    """Explicit N x N transformation, only built on small validation surfaces."""

    matrix: ComplexArray
    strategy: Strategy

    def __post_init__(self) -> None:
        rows, cols = self.matrix.shape
        if rows != cols:
            raise InvalidArgumentError(f"surface matrix must be square, got {self.matrix.shape}")
        _readonly(self.matrix)

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])

    def cascade(self, h: ComplexArray, g: ComplexArray) -> ComplexArray:
        return h @ self.matrix @ g

    def dense(self) -> ComplexArray:
        return self.matrix


@dataclass(frozen=True, eq=False)
class LowRankSurface:
    """Φ = left @ right^H stored as its two N x K factors."""

    left: ComplexArray
    right: ComplexArray
    strategy: Strategy

    def __post_init__(self) -> None:
        if self.left.shape != self.right.shape:
            raise InvalidArgumentError(
                f"factor shapes differ: {self.left.shape} vs {self.right.shape}"
            )
        _readonly(self.left)
        _readonly(self.right)

    @property
    def size(self) -> int:
        return int(self.left.shape[0])

    def cascade(self, h: ComplexArray, g: ComplexArray) -> ComplexArray:
        return (h @ self.left) @ (self.right.conj().T @ g)

    def dense(self) -> ComplexArray:
        return self.left @ self.right.conj().T

    def frobenius_norm(self) -> float:
        # the right factor has orthonormal columns
        return float(np.linalg.norm(self.left))


@dataclass(frozen=True, eq=False)
class EigenmodeSurface:
    """Φ = Q U^H kept implicit: H Φ G collapses to P Σ Λ V^H.

    `cascade` ignores its operands and rebuilds the product from the stored
    decompositions, which must be the ones of the H and G being cascaded.
    """

    G_svd: CanonicalSvd
    H_svd: CanonicalSvd
    strategy: Strategy = Strategy.ND_EIG_W

    @property
    def size(self) -> int:
        return int(self.G_svd.left.shape[0])

    @property
    def streams(self) -> int:
        return min(self.G_svd.singular_values.size, self.H_svd.singular_values.size)

    def composite_gains(self) -> NDArray[np.float64]:
        """ξ_k ρ_k for the aligned eigenmodes."""
        m = self.streams
        return self.G_svd.singular_values[:m] * self.H_svd.singular_values[:m]

    def cascade(self, h: ComplexArray, g: ComplexArray) -> ComplexArray:
        m = self.streams
        k = h.shape[0]
        n_t = g.shape[1]
        if self.H_svd.left.shape[0] != k or self.G_svd.right.shape[0] != n_t:
            raise InvalidArgumentError("eigenmode surface was built for different channels")
        p = self.H_svd.left[:, :m]
        v = self.G_svd.right[:, :m]
        return (p * self.composite_gains()[None, :]) @ v.conj().T


SurfaceConfig = DiagonalSurface | DenseSurface | LowRankSurface | EigenmodeSurface


@dataclass(frozen=True, eq=False)
class PsiVector:
    """Per-UE spatial contribution ψ_k over the N surface elements."""

    values: ComplexArray
    ue_index: int

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise NumericalError(f"ψ for UE {self.ue_index} has non-finite entries")
        _readonly(self.values)


@dataclass(frozen=True)
class SectorPartition:
    """Disjoint element index sets, one per UE (sector k belongs to UE k)."""

    index_sets: tuple[NDArray[np.int64], ...]
    size: int
    # stripe number (0 = lowest x) held by each UE
    stripe_of_ue: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        covered = np.concatenate(self.index_sets) if self.index_sets else np.array([])
        if covered.size != np.unique(covered).size:
            raise InvalidArgumentError("sectors overlap")
        if covered.size != self.size:
            raise InvalidArgumentError(
                f"sectors cover {covered.size} of {self.size} elements"
            )

    def __len__(self) -> int:
        return len(self.index_sets)


def nf_focusing_vector(
    surface: ElementGrid, ue: ArrayLike, wavelength: float
) -> ComplexArray:
    """e^{+jκ d_j}: conjugate of the spherical propagation phase to `ue`."""
    target = vec3(ue)
    distance = np.linalg.norm(surface.positions - target[None, :], axis=1)
    if np.any(distance == 0):
        raise DegenerateGeometryError("UE coincides with a surface element")
    return np.exp(2j * np.pi * distance / wavelength)


def direction_vector(theta: float, phi: float) -> NDArray[np.float64]:
    return np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )


def ff_steering_vector(
    surface: ElementGrid, theta: float, phi: float, wavelength: float
) -> ComplexArray:
    """Plane-wave phase profile towards (theta, phi).

    Positions are taken relative to the surface center and the sign matches
    `nf_focusing_vector`, so this is the limit of the focusing vector for a
    distant UE up to one common phase.
    """
    offsets = surface.positions - surface.center[None, :]
    projection = offsets @ direction_vector(theta, phi)
    return np.exp(-2j * np.pi * projection / wavelength)


def focusing_phase_gap(focusing: ArrayLike, steering: ArrayLike) -> float:
    """Largest element phase deviation (radians) after removing the common phase."""
    ratio = np.asarray(focusing) * np.conj(np.asarray(steering))
    common = np.angle(np.sum(ratio))
    return float(np.max(np.abs(np.angle(ratio * np.exp(-1j * common)))))


def _psi(left: ArrayLike, right: ArrayLike, ue_index: int) -> PsiVector:
    u = np.asarray(left, dtype=np.complex128).reshape(-1)
    w = np.asarray(right, dtype=np.complex128).reshape(-1)
    if u.size != w.size:
        raise InvalidArgumentError(f"length mismatch: {u.size} vs {w.size}")
    return PsiVector(values=np.conj(u) * w, ue_index=ue_index)


def psi_focusing(u_k: ArrayLike, f_nf: ArrayLike, ue_index: int = 0) -> PsiVector:
    """ψ_k = conj(u_k) ⊙ f_k."""
    return _psi(u_k, f_nf, ue_index)


def psi_mmse(u_k: ArrayLike, l_k: ArrayLike, ue_index: int = 0) -> PsiVector:
    """ψ_k = conj(u_k) ⊙ ℓ_k."""
    return _psi(u_k, l_k, ue_index)


def mmse_matrix(H: ChannelMatrix | ArrayLike, delta_tx: float) -> ComplexArray:
    """η-normalized regularized inverse L (N x K) with ‖L‖_F = 1.

    Evaluated as H^H (σ² I_K + H H^H)^{-1}, the K x K form of
    (σ² I_N + H^H H)^{-1} H^H.
    """
    raw = H.entries if isinstance(H, ChannelMatrix) else H
    h = np.asarray(raw, dtype=np.complex128)
    if not delta_tx > 0:
        raise InvalidArgumentError(f"delta_tx must be positive, got {delta_tx}")
    k, n = h.shape
    energy = float(np.linalg.norm(h) ** 2)
    if energy == 0:
        raise InvalidArgumentError("MMSE precoder needs a nonzero channel")
    # regularization scales with the mean per-element channel energy
    sigma_sq = delta_tx * energy / n
    # K x K Hermitian system instead of the N x N one
    gram = h @ h.conj().T + sigma_sq * np.eye(k)
    try:
        solved = scipy.linalg.solve(gram, h, assume_a="her")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(f"regularized {k}x{k} system is singular") from exc
    unnormalized = solved.conj().T
    # η normalization
    scale = np.linalg.norm(unnormalized)
    if not np.isfinite(scale) or scale == 0:
        raise NumericalError("MMSE precoder has zero or non-finite norm")
    return unnormalized / scale


def partition_sectors(
    surface: ElementGrid, K: int, ue_positions: ArrayLike | None = None
) -> SectorPartition:
    """Split the surface into K column stripes, one per UE.

    Stripe widths differ by at most one column, the wider stripes coming
    first in +x order. With `ue_positions`, UEs are ranked by azimuth about
    the surface center and the k-th ranked UE gets the k-th stripe along +x.
    Without positions UE k simply gets stripe k.
    """
    if K < 1 or K > surface.cols:
        raise InvalidArgumentError(
            f"cannot split {surface.cols} columns into {K} sectors"
        )
    widths = np.full(K, surface.cols // K)
    widths[: surface.cols % K] += 1
    edges = np.concatenate([[0], np.cumsum(widths)])
    columns = surface.column_index
    stripes = [
        np.flatnonzero((columns >= edges[s]) & (columns < edges[s + 1])) for s in range(K)
    ]

    if ue_positions is None:
        stripe_of_ue = np.arange(K, dtype=np.int64)
    else:
        azimuths = azimuth_about(ue_positions, surface.center)
        if azimuths.size != K:
            raise InvalidArgumentError(f"expected {K} UE positions, got {azimuths.size}")
        order = np.argsort(azimuths, kind="stable")
        stripe_of_ue = np.empty(K, dtype=np.int64)
        stripe_of_ue[order] = np.arange(K)

    sets = tuple(stripes[s].astype(np.int64) for s in stripe_of_ue)
    return SectorPartition(
        index_sets=sets,
        size=surface.size,
        stripe_of_ue=tuple(int(s) for s in stripe_of_ue),
    )


def sector_svd(G: ChannelMatrix, sector: ArrayLike) -> CanonicalSvd:
    """Canonical SVD of G with every row outside `sector` zeroed.

    Only the sector rows are decomposed; the left vectors are scattered back
    to length N so entries outside the sector are exact zeros.
    """
    rows = np.asarray(sector, dtype=np.int64).reshape(-1)
    if rows.size == 0:
        raise DegenerateSectorError("empty sector")
    block = G.entries[rows]
    if not np.any(block):
        raise DegenerateSectorError(
            f"sector of {rows.size} elements receives no feeder energy"
        )
    local = svd_canonical(block)
    left = np.zeros((G.shape[0], local.left.shape[1]), dtype=np.complex128)
    left[rows] = local.left
    left.setflags(write=False)
    return CanonicalSvd(
        left=left,
        singular_values=local.singular_values,
        right=local.right,
        rank_used=local.rank_used,
    )


def steering_for(
    surface: ElementGrid,
    ue: ArrayLike,
    wavelength: float,
    steering: PebSteering = PebSteering.NEAR_FIELD,
) -> ComplexArray:
    """Focusing vector to `ue`, or the steering vector towards its direction."""
    if steering is PebSteering.NEAR_FIELD:
        return nf_focusing_vector(surface, ue, wavelength)
    diff = vec3(ue) - surface.center
    distance = np.linalg.norm(diff)
    if distance == 0:
        raise DegenerateGeometryError("UE coincides with the surface center")
    theta = float(np.arccos(np.clip(diff[2] / distance, -1.0, 1.0)))
    phi = float(np.arctan2(diff[1], diff[0]))
    return ff_steering_vector(surface, theta, phi, wavelength)


def psi_peb(
    G: ChannelMatrix,
    sector: ArrayLike,
    ue: ArrayLike,
    wavelength: float,
    surface: ElementGrid,
    *,
    ue_index: int = 0,
    steering: PebSteering = PebSteering.NEAR_FIELD,
    reference: CanonicalSvd | None = None,
) -> tuple[PsiVector, ComplexArray]:
    """Principal eigenmode of the masked feeder channel for one sector.

    Returns ψ_k = conj(u_1) ⊙ f(ue), supported on the sector only, and the
    feeder direction b_k = v_1 of the masked channel. `reference` is the
    decomposition of the unmasked G, reused when the sector is the whole
    surface.
    """
    rows = np.asarray(sector, dtype=np.int64).reshape(-1)
    whole = rows.size == G.shape[0] and np.array_equal(rows, np.arange(rows.size))
    decomposition = reference if reference is not None and whole else sector_svd(G, rows)
    f = steering_for(surface, ue, wavelength, steering)
    psi = psi_focusing(decomposition.left[:, 0], f, ue_index)
    return psi, np.ascontiguousarray(decomposition.right[:, 0])


def combine_diagonal(psis: Sequence[PsiVector], strategy: Strategy) -> DiagonalSurface:
    """φ_n = exp(j arg Σ_k ψ_{k,n}); a zero aggregate gets phase 0."""
    if not psis:
        raise InvalidArgumentError("need at least one ψ vector")
    lengths = {psi.values.size for psi in psis}
    if len(lengths) != 1:
        raise InvalidArgumentError(f"ψ vectors have different lengths: {sorted(lengths)}")
    aggregate = np.sum([psi.values for psi in psis], axis=0)
    phases = np.where(aggregate == 0, 1.0 + 0.0j, np.exp(1j * np.angle(aggregate)))
    return DiagonalSurface(phases=phases.astype(np.complex128), strategy=strategy)


def _complete_basis(columns: ComplexArray) -> ComplexArray:
    """Extend orthonormal columns to a unitary matrix."""
    complement = scipy.linalg.null_space(columns.conj().T)
    return np.concatenate([columns, complement], axis=1)


def phi_eigenmode(
    G_svd: CanonicalSvd, H_svd: CanonicalSvd, explicit: bool = False
) -> EigenmodeSurface | DenseSurface:
    """Align the eigenmodes of G and H: Φ = Q U^H.

    With `explicit` the bases are completed to N x N unitaries and Φ is
    materialized (validation on small surfaces only).
    """
    n_g = G_svd.left.shape[0]
    n_h = H_svd.right.shape[0]
    if n_g != n_h:
        raise InvalidArgumentError(f"G has {n_g} surface rows but H has {n_h} columns")
    # implicit form: H Φ G collapses onto the two singular spectra
    if not explicit:
        return EigenmodeSurface(G_svd=G_svd, H_svd=H_svd)
    if n_g > EXPLICIT_EIGENMODE_LIMIT:
        raise InvalidArgumentError(
            f"explicit eigenmode surface limited to {EXPLICIT_EIGENMODE_LIMIT} elements, "
            f"got {n_g}"
        )
    # the first K columns carry the modes; the null-space completion only makes Φ unitary
    q_full = _complete_basis(H_svd.right)
    u_full = _complete_basis(G_svd.left)
    return DenseSurface(matrix=q_full @ u_full.conj().T, strategy=Strategy.ND_EIG_W)


def phi_mmse_nondiag(
    L: ArrayLike, G_svd: CanonicalSvd, K: int | None = None
) -> LowRankSurface:
    """Φ = L U_K^H with U_K the first K left singular vectors of G."""
    left = np.asarray(L, dtype=np.complex128)
    n, k = left.shape
    if K is not None and K != k:
        raise InvalidArgumentError(f"L has {k} columns, expected {K}")
    if G_svd.left.shape[0] != n:
        raise InvalidArgumentError(f"L has {n} rows but G has {G_svd.left.shape[0]}")
    if k > G_svd.left.shape[1]:
        raise InvalidArgumentError(f"K={k} exceeds the {G_svd.left.shape[1]} feeder modes")
    right = np.ascontiguousarray(G_svd.left[:, :k])
    return LowRankSurface(
        left=np.ascontiguousarray(left), right=right, strategy=Strategy.ND_MMSE_U
    )
