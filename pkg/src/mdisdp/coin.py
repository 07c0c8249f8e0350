"""Quantum-coin baseline for basis-dependent source flaws.

A virtual coin decides between sending key-basis and test-basis states. Its
imbalance ``Delta`` after post-selection limits how far the phase-error rate
can drift from the test-basis error rate ``e_y`` (Bloch sphere bound).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rates import Rate, shor_preskill_rate
from .states import ProtocolSpec, state_overlap


@dataclass(frozen=True)
class CoinInputs:
    delta_init: float
    p_pass: float
    e_y: float
    e_x: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta_init <= 1.0:
            raise ValueError("delta_init must lie in [0, 1]")
        if not 0.0 <= self.p_pass <= 1.0:
            raise ValueError("p_pass must lie in [0, 1]")
        if not 0.0 <= self.e_y <= 0.5:
            raise ValueError("e_y must lie in [0, 1/2]")
        if not 0.0 <= self.e_x <= 0.5:
            raise ValueError("e_x must lie in [0, 1/2]")


def _virtual_overlap(p: ProtocolSpec, states, key_basis: int, test_basis: int) -> complex:
    """<Phi_x|Phi_y> for one party.

    ``Phi_x = sum_a |key_label_a> |s(a, key)> / sqrt 2`` and
    ``Phi_y = sum_a |test_label_a> |s(a, test)> / sqrt 2``.
    """
    conv = p.conventions
    total = 0.0j
    for a in (0, 1):
        for a2 in (0, 1):
            label = np.vdot(conv.key_labels[a], conv.test_labels[a2])
            if label == 0:
                continue
            total += label * state_overlap(states[(a, key_basis)], states[(a2, test_basis)])
    return total / 2.0


def delta_init(p: ProtocolSpec) -> float:
    """Initial coin imbalance ``(1 - Re <Phi_x^A|Phi_y^A><Phi_x^B|Phi_y^B>)/2``."""
    test = p.test_basis()
    if test is None or p.conventions.test_labels is None:
        raise ValueError("protocol has no two-state test basis")
    ov = _virtual_overlap(p, p.alice_states, p.key_basis, test) * _virtual_overlap(p, p.bob_states, p.key_basis, test)
    return float(min(1.0, max(0.0, (1.0 - ov.real) / 2.0)))


def coin_phase_error(inputs: CoinInputs) -> float:
    """Upper bound on the phase-error rate from the Bloch sphere bound.

    ``Delta = delta_init / p_pass``; the bound is vacuous (1/2) once
    ``Delta >= 1/2`` and is capped at 1/2 otherwise.
    """
    if inputs.p_pass <= 0.0:
        raise ValueError("p_pass must be positive")
    delta = inputs.delta_init / inputs.p_pass
    if delta >= 0.5:
        return 0.5
    e = inputs.e_y
    bound = (e + 4 * delta * (1 - delta) * (1 - 2 * e)
             + 4 * (1 - 2 * delta) * math.sqrt(delta * (1 - delta) * e * (1 - e)))
    return min(0.5, bound)


def coin_key_rate(p_pass: float, e_ph: float, e_x: float) -> Rate:
    """``P_pass [1 - h2(e_ph) - h2(e_x)]`` with the coin phase-error bound."""
    return shor_preskill_rate(p_pass, e_ph, e_x)
