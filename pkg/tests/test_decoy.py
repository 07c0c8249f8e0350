import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from mdisdp.channel import ObservedStats, decoy_stats, device_preset, single_photon_stats
from mdisdp.decoy import DecoyBounds, DecoyInfeasible, bound_single_photon, decoy_key_rate
from mdisdp.pipeline import ProtocolChoice, evaluate_grid_point
from mdisdp.states import Family

NOMINAL = (0.3, 0.1, 0.0003)


def _stats_from_table(intensities, yields, errors, basis=0, tail_error=0.5):
    """Observed statistics generated by a photon-number yield table (extended by ones)."""
    n_max = 80
    n = np.arange(n_max)
    size = yields.shape[0]
    Y = np.ones((n_max, n_max))
    B = np.full((n_max, n_max), tail_error)
    Y[:size, :size] = yields
    B[:size, :size] = errors
    out = ObservedStats(intensities=(tuple(intensities), tuple(intensities)))
    for i, mu_a in enumerate(intensities):
        for j, mu_b in enumerate(intensities):
            w = np.outer(poisson.pmf(n, mu_a), poisson.pmf(n, mu_b))
            q = float(np.sum(w * Y))
            out.gains[(basis, i, j)] = q
            out.qbers[(basis, i, j)] = float(np.sum(w * B)) / q
    return out


@pytest.fixture(scope="module")
def nominal():
    dev = device_preset("parameter1").at_distance(10)
    return decoy_stats(NOMINAL, dev), single_photon_stats(dev)


def test_constant_yield_is_recovered():
    c, e = 0.37, 0.04
    size = 20
    stats = _stats_from_table(NOMINAL, np.full((size, size), c), np.full((size, size), e * c))
    b = bound_single_photon(stats, 0)
    assert b.ok
    assert b.yield_lower <= c + 1e-9
    assert b.error_upper >= e - 1e-9


def test_zero_errors_give_a_zero_error_bound():
    size = 20
    stats = _stats_from_table(NOMINAL, np.full((size, size), 0.2), np.zeros((size, size)), tail_error=0.0)
    assert all(e == 0.0 for e in stats.qbers.values())
    b = bound_single_photon(stats, 0)
    assert b.ok
    assert b.error_upper == pytest.approx(0.0, abs=1e-9)


def test_bounds_bracket_the_honest_single_photon_values(nominal):
    stats, honest = nominal
    for basis in (0, 1):
        b = bound_single_photon(stats, basis, n_cut=12)
        y11, e11 = honest[basis]
        assert b.ok
        assert b.yield_lower <= y11 + 1e-12
        assert b.error_upper >= e11 - 1e-12
        # and they are informative
        assert b.yield_lower > 0.5 * y11
        assert b.error_upper < 0.5


def test_photon_number_cutoff_has_converged(nominal):
    stats, _ = nominal
    for basis in (0, 1):
        a = bound_single_photon(stats, basis, n_cut=12)
        b = bound_single_photon(stats, basis, n_cut=16)
        assert a.yield_lower == pytest.approx(b.yield_lower, abs=1e-6)
        assert a.error_upper == pytest.approx(b.error_upper, abs=1e-6)


def test_removing_observations_never_tightens_the_bounds(nominal):
    stats, _ = nominal
    full = bound_single_photon(stats, 1)
    for dropped in [(2, 2), (1, 2), (0, 0)]:
        pairs = [(i, j) for i in range(3) for j in range(3) if (i, j) != dropped]
        fewer = bound_single_photon(stats, 1, pairs=pairs)
        assert fewer.yield_lower <= full.yield_lower + 1e-9
        assert fewer.error_upper >= full.error_upper - 1e-9


@settings(max_examples=12)
@given(
    st.integers(0, 2**32 - 1),
    st.floats(0.2, 0.8),
    st.floats(0.1, 0.6),
)
def test_generative_soundness(seed, mu, zeta_ratio):
    """Any yield table consistent with the statistics keeps Y11 and e11 inside the bounds."""
    rng = np.random.default_rng(seed)
    size = 10
    Y = rng.uniform(0.0, 1.0, size=(size, size))
    B = Y * rng.uniform(0.0, 0.5, size=(size, size))
    intensities = (mu, zeta_ratio * mu, 1e-3 * mu)
    stats = _stats_from_table(intensities, Y, B)
    b = bound_single_photon(stats, 0)
    assert b.yield_lower <= Y[1, 1] + 1e-8
    if b.yield_lower > 0:
        assert b.error_upper >= B[1, 1] / Y[1, 1] - 1e-8


def test_inconsistent_statistics_are_rejected(nominal):
    stats, _ = nominal
    broken = ObservedStats(intensities=stats.intensities, gains=dict(stats.gains), qbers=dict(stats.qbers))
    # a vacuum-like decoy clicking half the time forces a large Y00, which the
    # signal gain contradicts
    broken.gains[(0, 2, 2)] = 0.5
    try:
        b = bound_single_photon(broken, 0)
    except DecoyInfeasible:
        return
    assert not b.ok
    assert b.yield_lower == 0.0 and b.error_upper == 1.0


def test_intensity_order_is_checked(nominal):
    stats, _ = nominal
    with pytest.raises(ValueError):
        bound_single_photon(stats, 0, intensities=(0.1, 0.3, 0.0003))


def _synthetic_stats(q, e):
    return ObservedStats(gains={(0, 0, 0): q}, qbers={(0, 0, 0): e}, intensities=((0.3, 0.1, 0.0), (0.3, 0.1, 0.0)))


def test_key_rate_with_maximal_phase_error_is_not_positive():
    bounds = DecoyBounds(0, 0.4, 0.01, 12, "optimal", "optimal")
    assert decoy_key_rate(bounds, _synthetic_stats(0.01, 0.02), 0.5).unclamped <= 0.0


def test_key_rate_without_errors_is_the_single_photon_gain():
    bounds = DecoyBounds(0, 0.4, 0.0, 12, "optimal", "optimal")
    q11 = 0.3 * 0.3 * math.exp(-0.6) * 0.4
    assert decoy_key_rate(bounds, _synthetic_stats(0.01, 0.0), 0.0).value == pytest.approx(q11, rel=1e-14)


def test_pipeline_regression_fixture():
    dev = device_preset("parameter1").at_distance(10)
    out = evaluate_grid_point(ProtocolChoice(Family.DECOY_THA), (0.3,), dev, methods=("sdp", "coin"))
    assert out.status == "optimal"
    assert out.sdp_rate > 0.0
    assert out.sdp_rate == pytest.approx(8.930960084677532e-05, rel=1e-5)
