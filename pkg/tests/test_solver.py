import itertools
import math
import time
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdp_instances import random_problem, reference_optimum
from mdisdp.sdp_model import Constraint, Functional, SdpProblem
from mdisdp.solver import Certificate, SolverOptions, solve, solve_lp, verify_certificate


def _ones_problem():
    """Maximise X01 + X10 over 2x2 X >= 0 with unit diagonal."""
    zero = np.zeros((2, 2))
    diag = [Functional(np.diag([1.0, 0.0]), zero), Functional(np.diag([0.0, 1.0]), zero)]
    cons = tuple(Constraint(f, 1.0, 1.0, f"diag{k}") for k, f in enumerate(diag))
    objective = Functional(np.array([[0.0, 1.0], [1.0, 0.0]]), zero)
    return SdpProblem(2, 10.0 * np.eye(2), objective, 0.0, cons, cap=None)


def test_all_ones_example():
    report = solve(_ones_problem())
    assert report.certified
    assert report.dual == pytest.approx(2.0, abs=1e-8)
    assert report.primal == pytest.approx(2.0, abs=1e-8)
    np.testing.assert_allclose(report.blocks[0], np.ones((2, 2)), atol=1e-6)


def test_certificate_of_the_example_verifies_tightly():
    report = solve(_ones_problem())
    ver = verify_certificate(_ones_problem(), report)
    assert ver.passed
    assert ver.bound == pytest.approx(2.0, abs=1e-8)
    assert ver.inflation < 1e-12


def test_constant_objective_gives_zero_with_zero_gap():
    problem = _ones_problem()
    zero = np.zeros((2, 2))
    problem = replace(problem, objective=Functional(zero, zero))
    report = solve(problem)
    assert report.certified
    assert report.dual == pytest.approx(0.0, abs=1e-9)
    assert abs(report.gap) < 1e-9


@pytest.mark.parametrize("shift", [0.1, -0.1])
def test_corrupted_multiplier_never_certifies_a_smaller_bound(shift):
    problem = _ones_problem()
    cert = solve(problem).certificate
    bad = Certificate(cert.multipliers + shift * np.eye(len(cert.multipliers))[0], cert.residual_dual, cert.floor)
    ver = verify_certificate(problem, bad)
    if ver.passed:
        assert ver.bound >= 2.0 - 1e-9
    else:
        assert min(ver.min_eigs.values()) < 0
        assert "eigenvalue" in ver.message


def test_corrupted_multiplier_fails_with_a_negative_slack_eigenvalue():
    problem = _ones_problem()
    cert = solve(problem).certificate
    bad = Certificate(cert.multipliers - 0.1, cert.residual_dual, cert.floor)
    ver = verify_certificate(problem, bad)
    assert not ver.passed
    assert min(ver.min_eigs.values()) < -1e-3


def test_certificate_shape_is_checked():
    problem = _ones_problem()
    cert = solve(problem).certificate
    with pytest.raises(ValueError):
        verify_certificate(problem, Certificate(cert.multipliers[:1], cert.residual_dual, cert.floor))


def test_infeasible_problem_is_not_certified():
    problem = _ones_problem()
    zero = np.zeros((2, 2))
    extra = Constraint(Functional(np.eye(2), zero), 30.0, 30.0, "too_large")
    report = solve(replace(problem, constraints=problem.constraints + (extra,)))
    assert not report.certified


def test_random_instances_agree_with_reference_solver():
    rng = np.random.default_rng(7)
    for _ in range(30):
        d = int(rng.integers(2, 7))
        problem, _ = random_problem(rng, d, int(rng.integers(0, 11)), int(rng.integers(0, 3)))
        start = time.perf_counter()
        report = solve(problem)
        elapsed = time.perf_counter() - start
        assert report.certified, report.status
        assert abs(report.dual - report.primal) <= 1e-7 * max(1.0, abs(report.dual))
        assert elapsed < 1.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            reference = reference_optimum(problem)
        assert report.dual == pytest.approx(reference, abs=1e-6)


@settings(max_examples=25)
@given(st.integers(2, 5), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_weak_duality(d, n_eq, seed):
    rng = np.random.default_rng(seed)
    problem, witness = random_problem(rng, d, n_eq, 1)
    report = solve(problem)
    assert report.certified, report.status
    assert report.dual >= report.primal - 1e-9
    assert report.dual >= problem.value(*witness) - 1e-9
    assert report.verification.bound >= report.verification.raw_bound


@settings(max_examples=10)
@given(st.floats(0.01, 100.0), st.integers(0, 2**32 - 1))
def test_scaling_the_objective_scales_the_bound(k, seed):
    rng = np.random.default_rng(seed)
    problem, _ = random_problem(rng, 3, 2)
    base = solve(problem)
    scaled = solve(problem.with_objective_scaled(k))
    assert base.certified and scaled.certified
    assert scaled.dual == pytest.approx(k * base.dual, rel=1e-7, abs=1e-7 * k)


def test_options_gap_tolerance_is_respected():
    report = solve(_ones_problem(), SolverOptions(gap_tol=1e-4))
    assert report.certified
    assert abs(report.gap) <= 1e-4 * (1 + abs(report.primal) + abs(report.dual))


# ---------------------------------------------------------------------------
# linear programs


def test_lp_upper_bounded_variable():
    rep = solve_lp([1.0], A_ub=[[1.0]], b_ub=[3.0])
    assert rep.status == "optimal"
    assert rep.value == pytest.approx(3.0, abs=1e-8)
    assert rep.bound >= rep.value - 1e-12


def test_lp_degenerate_equality():
    rep = solve_lp([1.0], A_eq=[[2.0]], b_eq=[1.0])
    assert rep.value == pytest.approx(0.5, abs=1e-8)


def test_lp_infeasible_and_unbounded():
    assert solve_lp([1.0], A_eq=[[1.0]], b_eq=[-1.0]).status != "optimal"
    assert solve_lp([1.0]).status == "unbounded"


def _vertex_enumeration(c, A, b, lo, hi):
    """Maximum of c'x over {A x <= b, lo <= x <= hi} by trying every vertex."""
    n = len(c)
    rows = [(A[i], b[i]) for i in range(len(b))]
    for j in range(n):
        e = np.eye(n)[j]
        rows.append((e, hi[j]))
        rows.append((-e, -lo[j]))
    G = np.array([r for r, _ in rows])
    h = np.array([v for _, v in rows])
    best = -math.inf
    for active in itertools.combinations(range(len(rows)), n):
        M = G[list(active)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(active)])
        if np.all(G @ x <= h + 1e-9):
            best = max(best, float(c @ x))
    return best


@pytest.mark.parametrize("seed", range(20))
def test_lp_against_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    m = int(rng.integers(0, 6))
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    lo = -rng.uniform(0, 2, size=n)
    hi = rng.uniform(0.5, 3, size=n)
    # keep a known interior point feasible
    b = A @ ((lo + hi) / 2) + rng.uniform(0.1, 1.0, size=m)
    rep = solve_lp(c, A if m else None, b if m else None, bounds=list(zip(lo, hi)))
    assert rep.status == "optimal"
    expected = _vertex_enumeration(c, A, b, lo, hi)
    assert rep.value == pytest.approx(expected, abs=1e-8)
    assert expected - 1e-8 <= rep.bound <= expected + 1e-6


def test_lp_with_fifty_variables_matches_scipy():
    from scipy.optimize import linprog

    rng = np.random.default_rng(3)
    n, m = 50, 30
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = A @ np.full(n, 0.5) + rng.uniform(0.1, 1.0, size=m)
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(0, 1)] * n, method="highs")
    rep = solve_lp(c, A, b, bounds=[(0.0, 1.0)] * n)
    assert rep.status == "optimal"
    assert rep.value == pytest.approx(-ref.fun, abs=1e-8)
    assert rep.bound >= -ref.fun - 1e-9
