import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdisdp.states import (
    KET_MINUS,
    KET_PLUS,
    Coherent,
    Family,
    PureState,
    Qubit,
    build_protocol,
    coherent_overlap,
    lambda_matrix,
    state_overlap,
)

amplitudes = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


def test_coherent_overlap_identical_states():
    for alpha in (0, 0.3, -1.2j, 0.7 + 0.4j):
        assert coherent_overlap(alpha, alpha) == pytest.approx(1.0, abs=1e-15)


def test_coherent_overlap_antipodal_pair():
    s = math.sqrt(0.1)
    assert coherent_overlap(s, -s) == pytest.approx(math.exp(-0.2), abs=1e-15)
    assert abs(coherent_overlap(s, -s) - 0.818731) < 1e-6


def test_coherent_overlap_against_vacuum():
    nu = 1e-3
    assert coherent_overlap(0, math.sqrt(nu)) == pytest.approx(math.exp(-nu / 2), abs=1e-15)
    assert abs(coherent_overlap(0, math.sqrt(nu)) - 0.999500) < 1e-6


def test_coherent_overlap_matches_truncated_fock_sum():
    alpha, beta = 0.4 - 0.2j, -0.1 + 0.5j
    n = np.arange(40)
    log_fact = np.array([math.lgamma(k + 1) for k in n]) / 2

    def fock(a):
        return np.exp(-abs(a) ** 2 / 2 + n * np.log(complex(a)) - log_fact)

    assert np.vdot(fock(alpha), fock(beta)) == pytest.approx(coherent_overlap(alpha, beta), abs=1e-14)


def test_state_overlap_of_a_state_with_itself():
    s = PureState((Qubit.from_vector(KET_PLUS), Coherent(0.3)))
    assert state_overlap(s, s) == pytest.approx(1.0)


def test_orthogonal_qubit_factor_kills_the_overlap():
    s = PureState((Qubit.from_vector(KET_PLUS), Coherent(0.3), Coherent(-0.1)))
    t = PureState((Qubit.from_vector(KET_MINUS), Coherent(0.3), Coherent(-0.1)))
    assert abs(state_overlap(s, t)) < 1e-15


def test_trojan_pair_overlap_is_a_product_of_antipodal_overlaps():
    mu, nu = 0.05, 1e-4
    p = build_protocol(Family.PHASE_ENCODING_THA, mu=mu, nu=nu)
    ov = state_overlap(p.alice_states[(0, 0)], p.alice_states[(1, 0)])
    assert ov == pytest.approx(math.exp(-2 * mu) * math.exp(-2 * nu), abs=1e-15)


def test_mismatched_layouts_are_rejected():
    with pytest.raises(ValueError):
        state_overlap(PureState((Coherent(0.1),)), PureState((Coherent(0.1), Coherent(0.0))))


def test_unnormalised_qubit_rejected():
    with pytest.raises(ValueError):
        Qubit((1.0, 1.0))


@given(amplitudes, amplitudes, amplitudes, amplitudes)
def test_overlap_is_conjugate_symmetric(a, b, c, d):
    s = PureState((Coherent(a), Coherent(b)))
    t = PureState((Coherent(c), Coherent(d)))
    assert state_overlap(s, t) == pytest.approx(np.conj(state_overlap(t, s)), abs=1e-14)


@given(amplitudes, amplitudes)
def test_overlap_modulus_at_most_one_with_equality_only_for_equal_states(a, b):
    mag = abs(coherent_overlap(a, b))
    assert mag <= 1.0 + 1e-15
    # |<a|b>| = exp(-|a - b|^2 / 2)
    assert mag == pytest.approx(math.exp(-abs(a - b) ** 2 / 2), rel=1e-12, abs=1e-300)
    if abs(a - b) > 1e-3:
        assert mag < 1.0


def test_phase_encoding_code_states():
    mu = 0.1
    p = build_protocol(Family.PHASE_ENCODING, mu=mu, num_bases=2)
    s = math.sqrt(mu)
    expected = {(0, 0): s, (1, 0): -s, (0, 1): 1j * s, (1, 1): -1j * s}
    for key, amp in expected.items():
        (factor,) = p.alice_states[key].factors
        assert factor.amplitude == pytest.approx(amp, abs=1e-15)
        assert p.bob_states[key] == p.alice_states[key]


def test_phase_matching_code_states_use_per_basis_intensities():
    p = build_protocol(Family.PHASE_MATCHING, mus=(0.08, 0.3), num_bases=2)
    amp = {k: p.alice_states[k].factors[0].amplitude for k in p.alice_states}
    assert amp[(0, 0)] == pytest.approx(math.sqrt(0.08))
    assert amp[(1, 0)] == pytest.approx(-math.sqrt(0.08))
    assert amp[(0, 1)] == pytest.approx(1j * math.sqrt(0.3))
    assert amp[(1, 1)] == pytest.approx(-1j * math.sqrt(0.3))


def test_three_bases_are_spaced_by_a_third_of_pi():
    p = build_protocol(Family.PHASE_ENCODING, mu=0.2, num_bases=3)
    for x in range(3):
        amp = p.alice_states[(0, x)].factors[0].amplitude
        assert amp == pytest.approx(math.sqrt(0.2) * cmath.exp(1j * math.pi * x / 3))


def test_trojan_family_at_zero_intensity_reproduces_plain_lambda():
    plain = lambda_matrix(build_protocol(Family.PHASE_ENCODING, mu=0.1))
    trojan = lambda_matrix(build_protocol(Family.PHASE_ENCODING_THA, mu=0.1, nu=0.0))
    np.testing.assert_allclose(trojan, plain, atol=1e-15)


def test_single_basis_lambda_entries():
    mu = 0.15
    p = build_protocol(Family.PHASE_ENCODING, mu=mu, num_bases=1)
    lam = lambda_matrix(p)
    assert lam.shape == (4, 4)
    # rows (a, b) = 00, 01, 10, 11; overlap e^{-2 mu} per flipped bit
    flips = np.array([[bin(i ^ j).count("1") for j in range(4)] for i in range(4)])
    np.testing.assert_allclose(lam, np.exp(-2 * mu * flips), atol=1e-15)
    allowed = {1.0, math.exp(-2 * mu), math.exp(-4 * mu)}
    for v in lam.ravel():
        assert min(abs(v - a) for a in allowed) < 1e-15


def test_three_basis_lambda_is_psd():
    lam = lambda_matrix(build_protocol(Family.PHASE_ENCODING, mu=0.2, num_bases=3))
    assert np.linalg.eigvalsh(lam).min() >= -1e-10


def test_decoy_family_lambda_has_qubit_structure():
    lam = lambda_matrix(build_protocol(Family.DECOY_THA, nu=0.0))
    p = build_protocol(Family.DECOY_THA, nu=0.0)
    # |0> and |1> are orthogonal in the key basis
    assert abs(lam[p.index(0, 0, 0, 0), p.index(0, 1, 0, 0)]) < 1e-15
    # only Alice moves from |0> to |+>
    assert lam[p.index(0, 0, 0, 0), p.index(1, 0, 0, 0)] == pytest.approx(math.sqrt(0.5))


def test_index_layout_is_lexicographic():
    p = build_protocol(Family.PHASE_ENCODING, mu=0.1, num_bases=3)
    seen = [p.index(x, a, y, b) for x in range(3) for a in (0, 1) for y in range(3) for b in (0, 1)]
    assert seen == list(range(p.dim))


@pytest.mark.parametrize("kwargs", [
    {"family": "phase_encoding"},
    {"family": "phase_matching", "mus": (0.1,), "num_bases": 2},
    {"family": "phase_encoding", "mu": -0.1},
    {"family": "phase_encoding_tha", "mu": 0.1, "nu": -1e-4},
])
def test_invalid_protocols_rejected(kwargs):
    with pytest.raises(ValueError):
        build_protocol(**kwargs)


protocols = st.one_of(
    st.builds(lambda mu, m: build_protocol(Family.PHASE_ENCODING, mu=mu, num_bases=m),
              st.floats(0.0, 1.5), st.integers(1, 3)),
    st.builds(lambda mu, nu, m: build_protocol(Family.PHASE_ENCODING_THA, mu=mu, nu=nu, num_bases=m),
              st.floats(0.0, 1.5), st.floats(0.0, 0.01), st.integers(1, 3)),
    st.builds(lambda nu: build_protocol(Family.DECOY_THA, nu=nu), st.floats(0.0, 0.01)),
    st.builds(lambda mus: build_protocol(Family.PHASE_MATCHING, mus=mus, num_bases=len(mus)),
              st.lists(st.floats(0.0, 1.0), min_size=1, max_size=3)),
)


@given(protocols)
def test_lambda_is_hermitian_psd_with_unit_diagonal(p):
    lam = lambda_matrix(p)
    assert lam.shape == (p.dim, p.dim)
    np.testing.assert_allclose(lam, lam.conj().T, atol=1e-14)
    np.testing.assert_allclose(np.diag(lam).real, 1.0, atol=1e-14)
    assert np.linalg.eigvalsh(lam).min() >= -1e-10
