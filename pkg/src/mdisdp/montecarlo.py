"""Seeded Monte-Carlo sampling of the honest detection statistics.

Coherent light leaves linear optics as a product of coherent states, so each
detector (or time-bin gate) receives a Poisson number of photons with mean
equal to its intensity; a dark count fires independently with probability
``p_dc``. Sampling those counts and applying the click patterns reproduces the
closed-form and quadrature statistics without sharing any of their code, which
is how the simulators are cross-checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    PSI_MINUS_PATTERNS,
    PSI_PLUS_PATTERNS,
    DeviceParams,
    _mode_vectors,
    _rotation,
    _signal_amplitude,
)
from .states import ProtocolSpec

DEFAULT_CHUNK = 1_000_000


@dataclass(frozen=True)
class Estimate:
    """Sample mean of a Bernoulli quantity with its standard error."""

    mean: float
    stderr: float
    trials: int

    @classmethod
    def from_counts(cls, hits: int, trials: int) -> "Estimate":
        if trials <= 0:
            raise ValueError("need at least one trial")
        m = hits / trials
        return cls(m, math.sqrt(max(m * (1.0 - m), 0.0) / trials), trials)

    def agrees(self, value: float, sigmas: float = 3.0) -> bool:
        # a zero-variance estimate still allows one count of slack
        slack = max(self.stderr, 1.0 / self.trials)
        return abs(self.mean - value) <= sigmas * slack


def _clicks(rng: np.random.Generator, intensity: np.ndarray, p_dc: float) -> np.ndarray:
    photons = rng.poisson(intensity)
    dark = rng.random(intensity.shape) < p_dc
    return (photons > 0) | dark


def _chunks(trials: int, chunk: int):
    if trials <= 0:
        raise ValueError("trials must be positive")
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        yield n
        done += n


def sample_phase_stats(
    p: ProtocolSpec,
    dev: DeviceParams,
    trials: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
) -> dict[int, tuple[Estimate, Estimate]]:
    """Estimate ``(P_pass, error mass)`` per matched basis of the interference model.

    Each trial draws the bit pair from ``p.bit_weights`` and samples the two
    detectors behind the beam splitter. The error mass is the probability of
    a conclusive event that is also a bit error.
    """
    rng = np.random.default_rng(seed)
    eta = dev.arm_transmittance
    phase = np.exp(1j * dev.misalignment_phase)
    conv = p.conventions
    out = {}
    for g in range(p.num_bases):
        weights = np.asarray(p.bit_weights, dtype=float).ravel()
        weights = weights / weights.sum()
        amp_plus = np.empty(4)
        amp_minus = np.empty(4)
        err_plus = np.empty(4, dtype=bool)
        err_minus = np.empty(4, dtype=bool)
        for k, (a, b) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
            alpha = _signal_amplitude(p.alice_states[(a, g)])
            beta = _signal_amplitude(p.bob_states[(b, g)]) * phase
            amp_plus[k] = eta * abs(alpha + beta) ** 2 / 2
            amp_minus[k] = eta * abs(alpha - beta) ** 2 / 2
            err_plus[k] = (a == b) == conv.error_on_equal[(g, "psi_plus")]
            err_minus[k] = (a == b) == conv.error_on_equal[(g, "psi_minus")]
        passed = errors = 0
        for n in _chunks(trials, chunk):
            k = rng.choice(4, size=n, p=weights)
            plus = _clicks(rng, amp_plus[k], dev.p_dc)
            minus = _clicks(rng, amp_minus[k], dev.p_dc)
            psi_plus = plus & ~minus
            psi_minus = minus & ~plus
            passed += int(np.count_nonzero(psi_plus | psi_minus))
            errors += int(np.count_nonzero((psi_plus & err_plus[k]) | (psi_minus & err_minus[k])))
        out[g] = (Estimate.from_counts(passed, trials), Estimate.from_counts(errors, trials))
    return out


def sample_decoy_gains(
    intensities: tuple[float, float],
    basis: int,
    dev: DeviceParams,
    trials: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
) -> tuple[Estimate, Estimate]:
    """Estimate the gain and error mass of one intensity pair in the time-bin model.

    Every trial draws uniform bits and two independent uniform phases, then
    samples the four (detector, time bin) gates.
    """
    mu_a, mu_b = intensities
    rng = np.random.default_rng(seed)
    eta = dev.arm_transmittance
    rot = _rotation(dev.e_ali)
    modes_a = np.stack([_mode_vectors(basis, bit) for bit in (0, 1)])
    modes_b = np.stack([rot @ _mode_vectors(basis, bit) for bit in (0, 1)])
    # Z basis errs on either pattern when bits are equal; X basis errs on
    # Psi+ when bits differ and on Psi- when they agree
    passed = errors = 0
    for n in _chunks(trials, chunk):
        a = rng.integers(0, 2, size=n)
        b = rng.integers(0, 2, size=n)
        ea = np.exp(2j * math.pi * rng.random(n))
        eb = np.exp(2j * math.pi * rng.random(n))
        va = math.sqrt(eta * mu_a) * modes_a[a] * ea[:, None]
        vb = math.sqrt(eta * mu_b) * modes_b[b] * eb[:, None]
        r = 1.0 / math.sqrt(2.0)
        gates = np.stack([r * (va[:, 0] + vb[:, 0]), r * (va[:, 1] + vb[:, 1]),
                          r * (va[:, 0] - vb[:, 0]), r * (va[:, 1] - vb[:, 1])], axis=1)
        click = _clicks(rng, np.abs(gates) ** 2, dev.p_dc)
        count = click.sum(axis=1)

        def pattern(patterns):
            hit = np.zeros(n, dtype=bool)
            for i, j in patterns:
                hit |= click[:, i] & click[:, j]
            return hit & (count == 2)

        psi_plus = pattern(PSI_PLUS_PATTERNS)
        psi_minus = pattern(PSI_MINUS_PATTERNS)
        same = a == b
        if basis == 0:
            err = (psi_plus | psi_minus) & same
        else:
            err = (psi_plus & ~same) | (psi_minus & same)
        passed += int(np.count_nonzero(psi_plus | psi_minus))
        errors += int(np.count_nonzero(err))
    return Estimate.from_counts(passed, trials), Estimate.from_counts(errors, trials)
