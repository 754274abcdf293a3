import numpy as np
import pytest

from atris_sim.channel import svd_canonical
from atris_sim.errors import InfeasibleAllocationError, InvalidArgumentError
from atris_sim.precoding import (
    allocate_uniform,
    allocate_waterfilling,
    amaf_directions,
    assemble_B,
    solve_water_level,
)


def _bisection_powers(gains_sq: np.ndarray, noise: float, P_T: float) -> np.ndarray:
    """Reference water level found by bisection on the total power."""
    usable = gains_sq > 0
    floors = np.full(gains_sq.shape, np.inf)
    floors[usable] = noise / gains_sq[usable]
    low, high = 0.0, floors[usable].min() + P_T
    for _ in range(200):
        mid = 0.5 * (low + high)
        if np.maximum(mid - floors, 0.0).sum() > P_T:
            high = mid
        else:
            low = mid
    return np.maximum(0.5 * (low + high) - floors, 0.0)


def test_directions_are_orthonormal() -> None:
    rng = np.random.default_rng(0)
    g = rng.standard_normal((12, 4)) + 1j * rng.standard_normal((12, 4))
    svd = svd_canonical(g)
    one = amaf_directions(svd, 1)
    assert np.linalg.norm(one[:, 0]) == pytest.approx(1.0)
    full = amaf_directions(svd, 4)
    assert np.allclose(full.conj().T @ full, np.eye(4), atol=1e-12)
    with pytest.raises(InvalidArgumentError):
        amaf_directions(svd, 5)
    with pytest.raises(InvalidArgumentError):
        amaf_directions(svd, 0)


def test_uniform_allocation() -> None:
    assert np.allclose(allocate_uniform(0.01, 2), [0.005, 0.005])
    sixteen = allocate_uniform(0.01, 16)
    assert sixteen == pytest.approx([0.000625] * 16)
    assert sixteen.sum() == pytest.approx(0.01)
    with pytest.raises(InvalidArgumentError):
        allocate_uniform(0.0, 2)


def test_waterfilling_reference_cases() -> None:
    assert np.array_equal(allocate_waterfilling([1.0, 1.0], 1.0, 2.0), [1.0, 1.0])
    assert allocate_waterfilling([4.0, 1.0], 1.0, 1.0) == pytest.approx([0.875, 0.125], abs=1e-12)
    assert allocate_waterfilling([1.0, 1e-12], 1.0, 1.0) == pytest.approx([1.0, 0.0], abs=1e-12)


def test_water_level_is_returned() -> None:
    mu, powers = solve_water_level([4.0, 1.0], 1.0, 1.0)
    assert mu == pytest.approx(1.125)
    assert powers.sum() == pytest.approx(1.0)


def test_equal_gains_give_exactly_uniform_powers() -> None:
    P_T = 0.01
    powers = allocate_waterfilling([2.0, 2.0, 2.0], 0.5, P_T)
    assert np.array_equal(powers, allocate_uniform(P_T, 3))


def test_zero_gains_are_never_served() -> None:
    powers = allocate_waterfilling([0.0, 3.0, 0.0], 1.0, 2.0)
    assert powers[0] == 0.0
    assert powers[2] == 0.0
    assert powers[1] == pytest.approx(2.0)
    with pytest.raises(InfeasibleAllocationError):
        allocate_waterfilling([0.0, 0.0], 1.0, 1.0)


def test_waterfilling_rejects_bad_inputs() -> None:
    with pytest.raises(InvalidArgumentError):
        allocate_waterfilling([1.0, -1.0], 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        allocate_waterfilling([1.0], 0.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        allocate_waterfilling([1.0], 1.0, -1.0)


def test_waterfilling_matches_bisection_and_kkt() -> None:
    rng = np.random.default_rng(1234)
    for _ in range(1000):
        k = int(rng.integers(1, 9))
        gains = rng.uniform(0.1, 10.0, size=k)
        P_T = float(rng.uniform(0.1, 10.0))
        mu, powers = solve_water_level(gains, 1.0, P_T)
        floors = 1.0 / gains

        assert np.all(powers >= 0)
        assert powers.sum() == pytest.approx(P_T, rel=1e-12)
        assert np.allclose(powers, _bisection_powers(gains, 1.0, P_T), atol=1e-10)
        active = powers > 0
        assert np.all(floors[active] < mu)
        assert np.all(floors[~active] >= mu - 1e-12)
        assert np.allclose(powers[active] + floors[active], mu, atol=1e-12)


def test_waterfilling_is_permutation_equivariant() -> None:
    rng = np.random.default_rng(99)
    gains = rng.uniform(0.05, 5.0, size=6)
    order = rng.permutation(6)
    assert np.allclose(
        allocate_waterfilling(gains[order], 0.3, 2.0),
        allocate_waterfilling(gains, 0.3, 2.0)[order],
        atol=1e-12,
    )


def test_more_power_never_lowers_a_stream() -> None:
    gains = np.array([3.0, 1.0, 0.2, 0.05])
    previous = np.zeros(4)
    for P_T in (0.1, 0.5, 1.0, 5.0, 50.0):
        powers = allocate_waterfilling(gains, 1.0, P_T)
        assert np.all(powers >= previous - 1e-12)
        previous = powers


def test_assemble_b_scales_directions() -> None:
    beams = assemble_B(np.eye(2), [4.0, 1.0])
    assert np.allclose(beams.matrix, np.diag([2.0, 1.0]))
    assert beams.streams == 2
    assert beams.total_power == pytest.approx(5.0)

    rng = np.random.default_rng(2)
    q, _ = np.linalg.qr(rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3)))
    beams = assemble_B(q, allocate_uniform(0.01, 3))
    b = beams.matrix
    assert np.trace(b @ b.conj().T).real == pytest.approx(0.01, rel=1e-9)


def test_assemble_b_validation() -> None:
    with pytest.raises(InvalidArgumentError):
        assemble_B(np.eye(2), [1.0, -0.1])
    with pytest.raises(InvalidArgumentError):
        assemble_B(2 * np.eye(2), [1.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        assemble_B(np.eye(2), [1.0])
