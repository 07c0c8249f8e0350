"""Decoy-state bounds on the single-photon yield and error rate.

For phase-randomised pulses of intensities ``mu_A`` and ``mu_B`` the observed
gain mixes the photon-number yields ``Y_nm`` with Poisson weights,

    Q(mu_A, mu_B) = sum_nm P_muA(n) P_muB(m) Y_nm,

and the error mass ``E Q`` mixes the error masses ``b_nm`` (``0 <= b_nm <= Y_nm``)
in the same way. Truncating at ``n, m <= n_cut`` leaves a tail whose
contribution lies in ``[0, 1 - P_muA(<=n_cut) P_muB(<=n_cut)]``. The bounds
come from two LPs over these variables:

* ``Y11^L`` = min ``Y_11``;
* ``e11^U`` = (max ``b_11``) / ``Y11^L``, maximised over the whole feasible set,
  which upper-bounds ``b_11 / Y_11`` at every feasible point.

Both optima are read from the certified bounds of :func:`mdisdp.solver.solve_lp`,
so rounding in the LP solve can only loosen them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .channel import ObservedStats
from .rates import Rate, binary_entropy
from .solver import solve_lp

DEFAULT_N_CUT = 12
# relative slack on every observed gain and error mass; covers the
# quadrature error of the simulated statistics
DEFAULT_STAT_TOL = 1e-9


@dataclass(frozen=True)
class DecoyBounds:
    """Single-photon bounds for one basis."""

    basis: int
    yield_lower: float
    error_upper: float
    n_cut: int
    yield_status: str
    error_status: str

    def __post_init__(self):
        if not 0.0 <= self.yield_lower <= 1.0:
            raise ValueError("yield lower bound outside [0, 1]")
        if not 0.0 <= self.error_upper <= 1.0:
            raise ValueError("error upper bound outside [0, 1]")

    @property
    def ok(self) -> bool:
        return self.yield_status == "optimal" and self.error_status == "optimal"


class DecoyInfeasible(ValueError):
    """The observed statistics admit no photon-number yield table."""


def _split(intensities):
    if intensities and isinstance(intensities[0], (tuple, list)):
        return tuple(intensities[0]), tuple(intensities[1])
    return tuple(intensities), tuple(intensities)


def _check_order(side):
    if len(side) != 3:
        raise ValueError("need exactly three intensities (mu, zeta, omega) per side")
    mu, zeta, omega = side
    if not mu >= zeta >= omega >= 0:
        raise ValueError("intensities must satisfy mu >= zeta >= omega >= 0")


def _build_lp(stats: ObservedStats, basis: int, ia, ib, n_cut: int, pairs, stat_tol: float):
    """Equality form: one row ``sum w x + s = target`` per observation, scaled by the gain.

    Variables are ``Y_nm`` (``n*(n_cut+1) + m``), then ``b_nm`` at the same
    offsets, then one deviation ``s`` per row. ``s`` absorbs the truncated tail
    and the statistics tolerance, ``s in [-tol target, tail + tol target]``.
    Both rows of an intensity pair are divided by its gain ``Q``: dividing the
    error row by its own (possibly minute) mass would blow its coefficients up.
    """
    n = n_cut + 1
    nv = n * n
    n_obs = 2 * len(pairs)
    ntot = 2 * nv + n_obs
    A_eq = np.zeros((n_obs, ntot))
    b_eq = np.zeros(n_obs)
    bounds = [(0.0, 1.0)] * (2 * nv)
    r = 0
    for (i, j) in pairs:
        q = stats.gains[(basis, i, j)]
        e = stats.qbers[(basis, i, j)]
        pa = poisson.pmf(np.arange(n), ia[i])
        pb = poisson.pmf(np.arange(n), ib[j])
        w = np.outer(pa, pb).ravel()
        tail = max(0.0, 1.0 - float(w.sum()))
        scale = q if q > 0 else 1.0
        for offset, target in ((0, q), (nv, e * q)):
            A_eq[r, offset:offset + nv] = w / scale
            b_eq[r] = target / scale
            bounds.append((-stat_tol * target / scale, (tail + stat_tol * target) / scale))
            A_eq[r, 2 * nv + r] = 1.0
            r += 1
    A_ub = np.zeros((nv, ntot))
    for k in range(nv):
        A_ub[k, nv + k] = 1.0
        A_ub[k, k] = -1.0
    return A_ub, np.zeros(nv), A_eq, b_eq, bounds, n


def bound_single_photon(
    stats: ObservedStats,
    basis: int,
    intensities=None,
    n_cut: int = DEFAULT_N_CUT,
    pairs=None,
    stat_tol: float = DEFAULT_STAT_TOL,
) -> DecoyBounds:
    """Bound ``Y11`` from below and ``e11`` from above in one basis.

    ``intensities`` defaults to ``stats.intensities``; ``pairs`` restricts the
    intensity pairs ``(i, j)`` whose statistics are used (all nine by default).
    ``stat_tol`` widens every observed value to a relative interval.

    Raises
    ------
    DecoyInfeasible
        If no yield table reproduces the statistics.
    """
    if n_cut < 2:
        raise ValueError("n_cut must be at least 2")
    if not 0.0 <= stat_tol < 1.0:
        raise ValueError("stat_tol must lie in [0, 1)")
    ia, ib = _split(intensities if intensities is not None else stats.intensities)
    _check_order(ia)
    _check_order(ib)
    if pairs is None:
        pairs = [(i, j) for i in range(3) for j in range(3)]
    for (i, j) in pairs:
        if (basis, i, j) not in stats.gains:
            raise ValueError(f"statistics lack intensity pair {(i, j)} in basis {basis}")
    A_ub, b_ub, A_eq, b_eq, bounds, n = _build_lp(stats, basis, ia, ib, n_cut, pairs, stat_tol)
    nv = n * n
    y11 = n + 1

    c = np.zeros(len(bounds))
    c[y11] = -1.0
    lo = solve_lp(c, A_ub, b_ub, A_eq, b_eq, bounds=bounds)
    if lo.status == "infeasible":
        raise DecoyInfeasible(f"decoy statistics in basis {basis} are inconsistent (yield LP infeasible)")
    y_lower = min(1.0, max(0.0, -lo.bound)) if lo.status == "optimal" else 0.0

    c = np.zeros(len(bounds))
    c[nv + y11] = 1.0
    hi = solve_lp(c, A_ub, b_ub, A_eq, b_eq, bounds=bounds)
    if hi.status == "infeasible":
        raise DecoyInfeasible(f"decoy statistics in basis {basis} are inconsistent (error LP infeasible)")
    if hi.status == "optimal" and y_lower > 0:
        b_max = max(0.0, hi.bound)
        e_upper = min(1.0, b_max / y_lower)
    else:
        e_upper = 1.0
    return DecoyBounds(basis, float(y_lower), float(e_upper), n_cut, lo.status, hi.status)


def decoy_key_rate(bounds: DecoyBounds, stats: ObservedStats, e_ph11: float) -> Rate:
    """``Q11 [1 - h2(e_ph11)] - Q_mumu h2(E_mumu)`` in the key basis.

    ``Q11 = mu_A mu_B exp(-mu_A - mu_B) Y11^L`` uses the signal intensities
    (index 0 on each side).
    """
    ia, ib = _split(stats.intensities)
    mu_a, mu_b = ia[0], ib[0]
    basis = bounds.basis
    q11 = mu_a * mu_b * math.exp(-mu_a - mu_b) * bounds.yield_lower
    q = stats.gains[(basis, 0, 0)]
    e = stats.qbers[(basis, 0, 0)]
    for name, v in (("e_ph11", e_ph11), ("Q", q), ("E", e)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    return Rate.of(q11 * (1.0 - binary_entropy(e_ph11)) - q * binary_entropy(e))
