"""Full-scale checks against published reference rates.

Deselected by default; run with `pytest -m anchors`. Tolerance is 5%
relative or 0.5 bps/Hz, whichever is larger. Cases the simulator does not
reproduce are strict xfails carrying the measured value, so closing a gap
fails the run as an XPASS until the mark is removed.
"""

import numpy as np
import pytest

from atris_sim.experiments import (
    build_channels,
    build_feeder,
    evaluate,
    run_scalability_mc,
    two_ue_ring,
)
from atris_sim.geometry import fraunhofer_distance
from atris_sim.models import Scenario, Strategy

pytestmark = pytest.mark.anchors


def _close(value: float, reference: float) -> bool:
    return abs(value - reference) <= max(0.05 * abs(reference), 0.5)


def _known_gap(measured: str) -> pytest.MarkDecorator:
    """Known gap to the published value; see DESIGN.md, "Reference values"."""
    return pytest.mark.xfail(strict=True, reason=f"simulator gives {measured}")


@pytest.fixture(scope="module")
def reference() -> Scenario:
    return Scenario(ue_positions=((0.0, 1.0, 0.0),))


def _rates(base: Scenario, d: float, delta_phi: float, strategy: Strategy) -> tuple[float, ...]:
    scenario = two_ue_ring(base, d, 60.0, delta_phi)
    channels = build_channels(scenario, build_feeder(scenario))
    return evaluate(scenario.with_strategy(strategy), channels).per_ue_rates


def test_fraunhofer_distance(reference: Scenario) -> None:
    assert abs(fraunhofer_distance(reference.tris_grid, reference.wavelength) - 27.0) <= 1.5


@pytest.mark.parametrize(
    ("strategy", "sum_rate"),
    [
        pytest.param(Strategy.ND_EIG_W, 34.03, marks=_known_gap("30.45")),
        pytest.param(Strategy.ND_MMSE_U, 31.99, marks=_known_gap("28.45")),
        (Strategy.D_FOC_U, 24.63),
        pytest.param(Strategy.D_MMSE_U, 24.53, marks=_known_gap("20.61")),
        (Strategy.D_PEB_U, 19.59),
    ],
)
def test_angular_sum_rates_at_ten_meters(
    reference: Scenario, strategy: Strategy, sum_rate: float
) -> None:
    assert _close(sum(_rates(reference, 10.0, 30.0, strategy)), sum_rate)


@_known_gap("23.22")
def test_eigenmode_sum_rate_at_thirty_five_meters(reference: Scenario) -> None:
    assert _close(sum(_rates(reference, 35.0, 30.0, Strategy.ND_EIG_W)), 26.81)


@pytest.mark.parametrize(
    ("strategy", "d", "delta_phi", "expected"),
    [
        pytest.param(
            Strategy.D_FOC_U, 10.0, 0.0, (0.50, 1.76), marks=_known_gap("(0.84, 1.18)")
        ),
        (Strategy.ND_EIG_W, 10.0, 0.0, (16.80, 0.0)),
        (Strategy.D_FOC_W, 10.0, 0.0, (14.50, 0.0)),
        pytest.param(
            Strategy.D_FOC_U, 10.0, 30.0, (10.18, 14.45), marks=_known_gap("(11.53, 13.17)")
        ),
    ],
)
def test_per_user_rates(
    reference: Scenario,
    strategy: Strategy,
    d: float,
    delta_phi: float,
    expected: tuple[float, float],
) -> None:
    rates = _rates(reference, d, delta_phi, strategy)
    assert all(_close(r, e) for r, e in zip(rates, expected))


def test_scalability_trends(reference: Scenario) -> None:
    strategies = [Strategy.ND_EIG_W, Strategy.D_FOC_U, Strategy.ND_MMSE_U]
    result = run_scalability_mc(
        reference, [2, 16], 200, (5.0, 30.0), (30.0, 150.0), strategies, workers=4
    )
    summary = {
        (row.strategy, int(row.sweep["k"])): row.summary for row in result.rows
    }
    eig_2, eig_16 = summary[Strategy.ND_EIG_W, 2], summary[Strategy.ND_EIG_W, 16]
    assert eig_2 is not None and eig_16 is not None
    assert eig_16.mean_sum_rate > eig_2.mean_sum_rate
    assert eig_16.mean_sum_rate > 150.0 * 0.9
    focusing = summary[Strategy.D_FOC_U, 16]
    assert focusing is not None
    assert 0.60 * 0.9 <= focusing.mean_jain <= 0.75 * 1.1
    mmse = summary[Strategy.ND_MMSE_U, 2]
    assert mmse is not None
    assert mmse.mean_jain > 0.999
    assert np.isfinite(eig_16.rate_std)
