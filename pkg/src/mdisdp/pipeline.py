"""End-to-end evaluation of sweep points: statistics, SDP bound, key rates.

A *grid point* is one choice of intensities. Its evaluation runs

* phase-encoding and phase-matching families: honest statistics from the
  interference model, the phase-error SDP with equality constraints, and the
  rate ``P_pass [1 - h2(e_ph) - h2(e_bit)]`` in the key basis;
* the decoy family: honest multi-intensity statistics, the LP bounds on the
  single-photon yield and error rate, the homogenised SDP over those bounds,
  and the decoy key rate.

The coin baseline is evaluated on the same statistics whenever the protocol
has a single two-state test basis. A *sweep point* searches the grid and
keeps the certified optimum.
"""
from __future__ import annotations

import functools
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable

from .channel import DeviceParams, decoy_stats, phase_protocol_stats
from .coin import CoinInputs, coin_key_rate, coin_phase_error, delta_init
from .decoy import DEFAULT_N_CUT, DecoyInfeasible, bound_single_photon, decoy_key_rate
from .rates import Evaluation, KeyRatePoint, infinite_test_rate, log_grid, optimize_point, plob_bound, shor_preskill_rate
from .sdp_model import BoundedStats, assemble_sdp
from .solver import SolverOptions, solve
from .states import Family, build_protocol

METHODS = ("sdp", "coin", "plob", "infinite_test")
# intensities searched for the infinite-test-state reference curve
INFINITE_TEST_GRID = tuple(log_grid(1e-4, 2.0, 241))


@dataclass(frozen=True)
class ProtocolChoice:
    """Family and fixed parameters; intensities come from the grid.

    For the decoy family a grid point is the signal intensity ``mu``; the
    decoys are ``zeta_ratio * mu`` and ``omega_ratio * mu``.
    """

    family: Family
    num_bases: int = 2
    nu: float = 0.0
    zeta_ratio: float = 1.0 / 3.0
    omega_ratio: float = 1e-3
    n_cut: int = DEFAULT_N_CUT

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.num_bases < 2:
            raise ValueError("need at least two bases")
        if self.nu < 0:
            raise ValueError("nu must be nonnegative")
        if not 0.0 < self.zeta_ratio < 1.0 or not 0.0 <= self.omega_ratio < self.zeta_ratio:
            raise ValueError("decoy ratios must satisfy 0 <= omega < zeta < 1")

    @property
    def grid_width(self) -> int:
        """Number of intensities per grid point."""
        return self.num_bases if self.family is Family.PHASE_MATCHING else 1


@dataclass
class PointOutcome:
    """Everything computed at one grid point."""

    intensities: tuple[float, ...]
    e_bit: float = math.nan
    p_pass: float = math.nan
    e_ph_sdp: float = math.nan
    gap: float = math.nan
    status: str = "not_run"
    sdp_rate: float | None = None
    e_ph_coin: float = math.nan
    coin_rate: float | None = None
    min_eig: float = math.nan
    extra: dict = field(default_factory=dict)


def _solve_bound(problem, opts: SolverOptions):
    report = solve(problem, opts)
    eig = min(report.verification.min_eigs.values()) if report.verification else math.nan
    if report.certified:
        return min(0.5, max(0.0, report.dual)), report, eig
    return None, report, eig


def _phase_point(choice: ProtocolChoice, mus, dev: DeviceParams, methods, opts) -> PointOutcome:
    if choice.family is Family.PHASE_MATCHING:
        p = build_protocol(choice.family, mus=mus, num_bases=choice.num_bases)
    else:
        p = build_protocol(choice.family, mu=mus[0], num_bases=choice.num_bases, nu=choice.nu)
    stats = phase_protocol_stats(p, dev)
    key = p.key_basis
    out = PointOutcome(tuple(mus), e_bit=stats.e_bit[key], p_pass=stats.p_pass[key])
    if out.p_pass <= 0.0:
        out.status = "no_signal"
        return out
    if "sdp" in methods:
        e_ph, report, out.min_eig = _solve_bound(assemble_sdp(p, stats), opts)
        out.status = report.status
        out.gap = report.gap
        if e_ph is not None:
            out.e_ph_sdp = e_ph
            out.sdp_rate = shor_preskill_rate(out.p_pass, e_ph, out.e_bit).value
    test = p.test_basis()
    if "coin" in methods and choice.num_bases == 2 and p.conventions.test_labels is not None:
        e_y = min(0.5, stats.e_bit[test])
        e_x = min(0.5, out.e_bit)
        out.e_ph_coin = coin_phase_error(CoinInputs(delta_init(p), out.p_pass, e_y, e_x))
        out.coin_rate = coin_key_rate(out.p_pass, out.e_ph_coin, e_x).value
    return out


def _decoy_point(choice: ProtocolChoice, mus, dev: DeviceParams, methods, opts) -> PointOutcome:
    mu = mus[0]
    intensities = (mu, choice.zeta_ratio * mu, choice.omega_ratio * mu)
    stats = decoy_stats(intensities, dev)
    p = build_protocol(Family.DECOY_THA, nu=choice.nu)
    key, test = p.key_basis, p.test_basis()
    out = PointOutcome(tuple(mus), e_bit=stats.e_bit[key], p_pass=stats.p_pass[key])
    try:
        bounds = {g: bound_single_photon(stats, g, n_cut=choice.n_cut) for g in (key, test)}
    except DecoyInfeasible:
        out.status = "decoy_infeasible"
        return out
    out.extra = {
        "yield_lower": {g: b.yield_lower for g, b in bounds.items()},
        "error_upper": {g: b.error_upper for g, b in bounds.items()},
    }
    if not all(b.ok for b in bounds.values()) or min(b.yield_lower for b in bounds.values()) <= 0.0:
        out.status = "decoy_bounds_failed"
        return out
    if "sdp" in methods:
        bounded = BoundedStats(
            {g: b.yield_lower for g, b in bounds.items()},
            {g: b.error_upper for g, b in bounds.items()},
        )
        e_ph, report, out.min_eig = _solve_bound(assemble_sdp(p, bounded), opts)
        out.status = report.status
        out.gap = report.gap
        if e_ph is not None:
            out.e_ph_sdp = e_ph
            out.sdp_rate = decoy_key_rate(bounds[key], stats, e_ph).value
    if "coin" in methods:
        # worst case over the decoy intervals: smallest single-photon yield,
        # largest test-basis error rate
        e_y = min(0.5, bounds[test].error_upper)
        out.e_ph_coin = coin_phase_error(CoinInputs(delta_init(p), bounds[key].yield_lower, e_y))
        out.coin_rate = decoy_key_rate(bounds[key], stats, out.e_ph_coin).value
    return out


def evaluate_grid_point(choice: ProtocolChoice, mus, dev: DeviceParams, methods=METHODS,
                        opts: SolverOptions | None = None) -> PointOutcome:
    """Evaluate one intensity choice on one device."""
    opts = opts or SolverOptions()
    mus = tuple(float(m) for m in mus)
    if len(mus) != choice.grid_width:
        raise ValueError(f"grid point needs {choice.grid_width} intensities, got {len(mus)}")
    if choice.family is Family.DECOY_THA:
        return _decoy_point(choice, mus, dev, methods, opts)
    return _phase_point(choice, mus, dev, methods, opts)


def _evaluate(choice, dev, methods, opts, mus) -> Evaluation:
    # module level so that a process pool can pickle it
    outcome = evaluate_grid_point(choice, mus, dev, methods, opts)
    return Evaluation(outcome.sdp_rate, outcome.coin_rate, outcome)


def best_infinite_test_rate(eta: float) -> float:
    return max(infinite_test_rate(mu, eta) for mu in INFINITE_TEST_GRID)


def summarize_failures(outcomes) -> str:
    counts = Counter(o.status for o in outcomes if o.sdp_rate is None)
    return ",".join(f"{k}x{v}" for k, v in sorted(counts.items()))


def optimize_sweep_point(
    choice: ProtocolChoice,
    grid,
    dev: DeviceParams,
    axis: float,
    methods=METHODS,
    opts: SolverOptions | None = None,
    map_fn: Callable = map,
) -> KeyRatePoint:
    """Search ``grid`` at one device setting and assemble the sweep row.

    Only certified SDP evaluations compete. When none qualifies the status is
    ``failed`` and the SDP rate is absent from ``rates``.
    """
    opts = opts or SolverOptions()
    evaluate = functools.partial(_evaluate, choice, dev, tuple(methods), opts)
    best, best_coin, grid, evals = optimize_point(evaluate, grid, map_fn)
    return _key_rate_point(choice, dev, axis, methods, best, best_coin, grid, [e.payload for e in evals])


def _key_rate_point(choice, dev, axis, methods, best, best_coin, grid, outcomes) -> KeyRatePoint:
    rates: dict[str, float] = {}
    eta = dev.total_transmittance
    if "plob" in methods and eta < 1.0:
        rates["plob"] = plob_bound(eta)
    if "infinite_test" in methods and choice.family is Family.PHASE_MATCHING and eta > 0.0:
        rates["infinite_test"] = best_infinite_test_rate(eta)
    coin_mus = None
    if "coin" in methods and best_coin is not None:
        rates["coin"] = float(outcomes[best_coin].coin_rate)
        coin_mus = grid[best_coin]
    details = {
        "outcomes": outcomes,
        "failures": summarize_failures(o for o in outcomes if "sdp" in methods),
    }
    if "sdp" in methods and best is None:
        first = outcomes[0]
        return KeyRatePoint(axis, first.intensities, math.nan, first.e_bit, first.p_pass, rates,
                            math.nan, "failed", coin_mus, grid, details)
    chosen = outcomes[best if best is not None else (best_coin if best_coin is not None else 0)]
    if "sdp" in methods:
        rates["sdp"] = float(chosen.sdp_rate)
    status = chosen.status if "sdp" in methods else "skipped"
    return KeyRatePoint(axis, chosen.intensities, chosen.e_ph_sdp, chosen.e_bit, chosen.p_pass, rates,
                        abs(chosen.gap), status, coin_mus, grid, details)


def device_at(dev: DeviceParams, axis_kind: str, value: float) -> DeviceParams:
    """Place the device at a distance (km) or total loss (dB)."""
    if axis_kind == "distance":
        return dev.at_distance(value)
    if axis_kind == "loss":
        return dev.at_total_loss(value)
    raise ValueError(f"unknown sweep axis {axis_kind!r}")


def with_gap_tol(opts: SolverOptions, gap_tol: float | None) -> SolverOptions:
    return opts if gap_tol is None else replace(opts, gap_tol=gap_tol)
