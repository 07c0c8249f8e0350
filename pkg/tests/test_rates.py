import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from mdisdp.rates import (
    Evaluation,
    Rate,
    binary_entropy,
    infinite_test_rate,
    log_grid,
    optimize_point,
    plob_bound,
    shor_preskill_rate,
)

probabilities = st.floats(0.0, 1.0)


def test_binary_entropy_endpoints():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == 1.0


def test_binary_entropy_reference_value():
    assert abs(binary_entropy(0.11) - 0.499916) < 1e-6


def test_binary_entropy_rejects_out_of_range():
    with pytest.raises(ValueError):
        binary_entropy(1.5)


@given(probabilities)
def test_binary_entropy_symmetry(p):
    assert binary_entropy(p) == pytest.approx(binary_entropy(1.0 - p), abs=1e-12)


@given(probabilities)
def test_binary_entropy_bounded(p):
    assert 0.0 <= binary_entropy(p) <= 1.0


@given(st.floats(0.0, 1.0))
def test_shor_preskill_without_errors_returns_pass_probability(p):
    assert shor_preskill_rate(p, 0.0, 0.0).value == p


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_shor_preskill_with_maximal_phase_error_is_not_positive(p, e):
    r = shor_preskill_rate(p, 0.5, e)
    assert r.unclamped <= 0.0
    assert r.value == 0.0


def test_rate_keeps_the_unclamped_value():
    assert Rate.of(-0.3) == Rate(0.0, -0.3)


def test_plob_examples():
    assert plob_bound(0.5) == pytest.approx(1.0, abs=1e-15)
    assert abs(plob_bound(1e-3) - 0.0014434) < 1e-7
    eta = 1e-9
    assert plob_bound(eta) == pytest.approx(eta / math.log(2), rel=1e-8)


def test_plob_rejects_unit_transmittance():
    with pytest.raises(ValueError):
        plob_bound(1.0)


@given(st.floats(0.0, 0.999), st.floats(1e-6, 0.5))
def test_plob_strictly_decreasing_in_loss(eta, shrink):
    lower = eta * (1.0 - shrink)
    if lower < eta:
        assert plob_bound(lower) < plob_bound(eta)


def test_infinite_test_rate_vanishes_without_light():
    assert infinite_test_rate(0.0, 0.3) == 0.0


@pytest.mark.parametrize("mu", [0.01, 0.1, 0.7])
def test_infinite_test_rate_without_loss(mu):
    g = 1 - math.exp(-2 * mu)
    assert infinite_test_rate(mu, 1.0) == pytest.approx(g * (1 - binary_entropy(g / 2)), rel=1e-13)


def test_infinite_test_rate_double_evaluation():
    mu, eta = 0.1, 0.01
    mpmath.mp.dps = 40
    m, s = mpmath.mpf(mu), mpmath.sqrt(mpmath.mpf(eta))
    gain = 1 - mpmath.exp(-2 * m * s)
    err = (1 - mpmath.exp(-4 * m * (1 - s)) * mpmath.exp(-2 * m * s)) / 2
    h = -err * mpmath.log(err, 2) - (1 - err) * mpmath.log(1 - err, 2)
    assert infinite_test_rate(mu, eta) == pytest.approx(float(gain * (1 - h)), rel=1e-12)


def _constant(values):
    table = dict(values)

    def evaluate(point):
        return Evaluation(table[point], None, point)

    return evaluate


def test_optimize_point_single_point_grid():
    best, coin, grid, evals = optimize_point(_constant({(0.1,): 0.4}), [(0.1,)])
    assert best == 0 and coin is None
    assert evals[0].sdp_rate == 0.4


def test_optimize_point_breaks_ties_towards_the_first_point():
    values = {(0.1,): 0.2, (0.2,): 0.5, (0.3,): 0.5}
    best, _, grid, _ = optimize_point(_constant(values), list(values))
    assert grid[best] == (0.2,)


def test_optimize_point_skips_uncertified_points():
    values = {(0.1,): None, (0.2,): 0.1, (0.3,): None}
    best, _, grid, _ = optimize_point(_constant(values), list(values))
    assert grid[best] == (0.2,)
    best, _, _, _ = optimize_point(_constant({(0.1,): None}), [(0.1,)])
    assert best is None


@given(st.lists(st.one_of(st.none(), st.floats(0.0, 1.0)), min_size=1, max_size=12))
def test_optimized_rate_dominates_every_grid_point(rates):
    grid = [(0.01 * (k + 1),) for k in range(len(rates))]
    best, _, _, evals = optimize_point(_constant(dict(zip(grid, rates))), grid)
    certified = [r for r in rates if r is not None]
    if not certified:
        assert best is None
    else:
        assert all(evals[best].sdp_rate >= r for r in certified)


def test_optimize_point_rejects_bad_grids():
    with pytest.raises(ValueError):
        optimize_point(_constant({}), [])
    with pytest.raises(ValueError):
        optimize_point(_constant({(0.0,): 1.0}), [(0.0,)])


def test_log_grid_endpoints_and_ratio():
    g = log_grid(1e-3, 1e-1, 3)
    assert g == pytest.approx([1e-3, 1e-2, 1e-1], rel=1e-12)
    assert log_grid(0.2, 0.5, 1) == [0.2]
    assert len(log_grid(1e-4, 2.0, 241)) == 241
