"""Key-rate formulas, the repeaterless capacity and the intensity search."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np


class Rate(NamedTuple):
    """A key rate together with its unclamped value."""

    value: float
    unclamped: float

    @classmethod
    def of(cls, x: float) -> "Rate":
        return cls(max(0.0, x), x)


def binary_entropy(p: float) -> float:
    """h2(p) = -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary entropy needs p in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _check_unit(**values: float) -> None:
    for name, v in values.items():
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v!r}")


def shor_preskill_rate(p_pass: float, e_ph: float, e_bit: float) -> Rate:
    """``P_pass [1 - h2(e_ph) - h2(e_bit)]`` with error correction at the Shannon limit."""
    _check_unit(p_pass=p_pass, e_ph=e_ph, e_bit=e_bit)
    return Rate.of(p_pass * (1.0 - binary_entropy(e_ph) - binary_entropy(e_bit)))


def plob_bound(eta: float) -> float:
    """Repeaterless secret-key capacity ``-log2(1 - eta)`` of a pure-loss channel."""
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"transmittance must lie in [0, 1), got {eta!r}")
    return -math.log1p(-eta) / math.log(2.0)


def infinite_test_rate(mu: float, eta: float) -> float:
    """Loss-only key rate of phase matching with infinitely many test states.

    ``eta`` is the total transmittance; each arm carries ``sqrt(eta)``.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"transmittance must lie in (0, 1], got {eta!r}")
    s = math.sqrt(eta)
    gain = -math.expm1(-2.0 * mu * s)
    if gain == 0.0:
        return 0.0
    err = (1.0 - math.exp(-4.0 * mu * (1.0 - s) - 2.0 * mu * s)) / 2.0
    return gain * (1.0 - binary_entropy(err))


@dataclass
class KeyRatePoint:
    """Result of one sweep point after the intensity search.

    ``axis`` is the distance in km or the total loss in dB. ``rates`` maps
    method names (``sdp``, ``coin``, ``plob``, ``infinite_test``) to clamped
    rates; methods that were not run are absent.
    """

    axis: float
    intensities: tuple[float, ...]
    e_ph: float
    e_bit: float
    p_pass: float
    rates: dict[str, float]
    gap: float
    status: str
    coin_intensities: tuple[float, ...] | None = None
    grid: list[tuple[float, ...]] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.rates.items():
            if not math.isfinite(v):
                raise ValueError(f"rate {k!r} is not finite")


class Evaluation(NamedTuple):
    """One grid point: certified SDP rate (None if not certified) and the coin rate."""

    sdp_rate: float | None
    coin_rate: float | None
    payload: object


def _argmax(values: Sequence[float | None]) -> int | None:
    best = None
    for i, v in enumerate(values):
        if v is None or not math.isfinite(v):
            continue
        if best is None or v > values[best]:
            best = i
    return best


def optimize_point(
    evaluate: Callable[[tuple[float, ...]], Evaluation],
    grid: Iterable[tuple[float, ...]],
    map_fn: Callable = map,
):
    """Exhaustive search over an intensity grid.

    ``evaluate`` returns an :class:`Evaluation` for a grid point; only
    certified SDP evaluations (``sdp_rate`` not None) compete. The SDP and the
    coin method are maximised separately over the same grid. Ties go to the
    smallest grid index. Returns ``(best_sdp_index, best_coin_index, grid,
    evaluations)``; an index is None when no grid point qualified.

    ``map_fn`` may be a pool's ``map`` to evaluate points concurrently; the
    result does not depend on completion order.
    """
    grid = [tuple(g) for g in grid]
    if not grid:
        raise ValueError("empty search grid")
    for g in grid:
        if any(v <= 0 for v in g):
            raise ValueError("grid intensities must be positive")
    evals = list(map_fn(evaluate, grid))
    best_sdp = _argmax([e.sdp_rate for e in evals])
    best_coin = _argmax([e.coin_rate for e in evals])
    return best_sdp, best_coin, grid, evals


def log_grid(lo: float, hi: float, n: int) -> list[float]:
    """``n`` logarithmically spaced values from lo to hi (inclusive)."""
    if lo <= 0 or hi < lo or n < 1:
        raise ValueError("need 0 < lo <= hi and n >= 1")
    if n == 1:
        return [lo]
    return [float(v) for v in np.geomspace(lo, hi, n)]
