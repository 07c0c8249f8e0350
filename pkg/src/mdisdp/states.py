"""Pure code states, their inner products and the protocol families.

A code state is a tensor product of factors, each either a single-mode
coherent state or a qubit. Overlaps of product states factorise, so every
entry of the joint inner-product matrix is available in closed form.

Row order of the joint matrix is lexicographic in ``(x, a, y, b)``: Alice's
basis, Alice's bit, Bob's basis, Bob's bit. All coefficient matrices built
elsewhere in the package use :meth:`ProtocolSpec.index` and therefore agree
on this layout.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

ANNOUNCEMENTS = ("psi_plus", "psi_minus")

_SQRT_HALF = 1.0 / math.sqrt(2.0)

# qubit vectors in the computational basis
KET_0 = np.array([1.0, 0.0], dtype=complex)
KET_1 = np.array([0.0, 1.0], dtype=complex)
KET_PLUS = np.array([_SQRT_HALF, _SQRT_HALF], dtype=complex)
KET_MINUS = np.array([_SQRT_HALF, -_SQRT_HALF], dtype=complex)
KET_PLUS_I = np.array([_SQRT_HALF, 1j * _SQRT_HALF], dtype=complex)
KET_MINUS_I = np.array([_SQRT_HALF, -1j * _SQRT_HALF], dtype=complex)

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class Coherent:
    """Single-mode coherent state with complex amplitude ``amplitude``."""

    amplitude: complex


@dataclass(frozen=True)
class Qubit:
    amplitudes: tuple[complex, complex]

    def __post_init__(self):
        a0, a1 = self.amplitudes
        norm = abs(a0) ** 2 + abs(a1) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"qubit amplitudes must be normalised, got norm {norm!r}")

    @classmethod
    def from_vector(cls, vec) -> "Qubit":
        return cls((complex(vec[0]), complex(vec[1])))


StateFactor = Union[Coherent, Qubit]


@dataclass(frozen=True)
class PureState:
    factors: tuple[StateFactor, ...]

    def layout(self) -> tuple[type, ...]:
        return tuple(type(f) for f in self.factors)


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """Return <alpha|beta> for coherent states."""
    alpha = complex(alpha)
    beta = complex(beta)
    return cmath.exp(-(abs(alpha) ** 2 + abs(beta) ** 2) / 2 + alpha.conjugate() * beta)


def _factor_overlap(f: StateFactor, g: StateFactor) -> complex:
    if isinstance(f, Coherent):
        return coherent_overlap(f.amplitude, g.amplitude)
    return complex(np.vdot(np.asarray(f.amplitudes), np.asarray(g.amplitudes)))


def state_overlap(s: PureState, t: PureState) -> complex:
    """Return <s|t> as the product of per-factor overlaps.

    Raises
    ------
    ValueError
        If the two states do not share the same factor layout.
    """
    if s.layout() != t.layout():
        raise ValueError("states have mismatched factor layouts")
    out = 1.0 + 0.0j
    for f, g in zip(s.factors, t.factors):
        out *= _factor_overlap(f, g)
    return out


class Family(str, enum.Enum):
    PHASE_ENCODING = "phase_encoding"
    PHASE_ENCODING_THA = "phase_encoding_tha"
    DECOY_THA = "decoy_tha"
    PHASE_MATCHING = "phase_matching"


@dataclass(frozen=True)
class Conventions:
    """How the virtual entanglement-based protocol is read out.

    ``key_labels`` are the qubit vectors of the virtual register that are
    correlated with bit 0 and bit 1 of the key basis. ``corrections`` maps each
    conclusive announcement to the unitary Bob applies to his virtual qubit.
    ``observable`` is the two-qubit operator whose -1 outcome defines a phase
    error after correction. ``error_on_equal[(basis, z)]`` is True when equal
    bits count as an error for announcement ``z`` in that basis. ``test_labels``
    are the virtual-register vectors paired with the two test states of the
    quantum-coin construction.
    """

    key_labels: tuple[np.ndarray, np.ndarray]
    corrections: Mapping[str, np.ndarray]
    observable: np.ndarray
    error_on_equal: Mapping[tuple[int, str], bool]
    test_labels: tuple[np.ndarray, np.ndarray] | None = None


@dataclass(frozen=True)
class ProtocolSpec:
    family: Family
    alice_states: Mapping[tuple[int, int], PureState]
    bob_states: Mapping[tuple[int, int], PureState]
    num_bases: int
    key_basis: int
    conventions: Conventions
    intensities: tuple[float, ...] = ()
    trojan_intensity: float = 0.0
    # P(a_g, b_g) / f_g for every bit pair; uniform bits give 1/4
    bit_weights: np.ndarray = field(default_factory=lambda: np.full((2, 2), 0.25))

    def __post_init__(self):
        if self.num_bases < 1:
            raise ValueError("num_bases must be >= 1")
        if not 0 <= self.key_basis < self.num_bases:
            raise ValueError("key_basis out of range")
        if any(mu < 0 for mu in self.intensities) or self.trojan_intensity < 0:
            raise ValueError("intensities must be nonnegative")
        if abs(float(np.sum(self.bit_weights)) - 1.0) > 1e-12:
            raise ValueError("bit weights must sum to 1")

    @property
    def dim(self) -> int:
        return (2 * self.num_bases) ** 2

    def index(self, x: int, a: int, y: int, b: int) -> int:
        """Row of the joint input (x, a, y, b) in every d x d matrix."""
        m = self.num_bases
        return ((x * 2 + a) * m + y) * 2 + b

    def alice_list(self) -> list[PureState]:
        return [self.alice_states[(a, x)] for x in range(self.num_bases) for a in (0, 1)]

    def bob_list(self) -> list[PureState]:
        return [self.bob_states[(b, y)] for y in range(self.num_bases) for b in (0, 1)]

    def test_basis(self) -> int | None:
        """First basis that is not the key basis, or None for one-basis protocols."""
        for x in range(self.num_bases):
            if x != self.key_basis:
                return x
        return None


def _overlap_matrix(states: list[PureState]) -> np.ndarray:
    n = len(states)
    out = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            out[i, j] = state_overlap(states[i], states[j])
    return out


def lambda_matrix(p: ProtocolSpec) -> np.ndarray:
    """Joint inner-product matrix of all (Alice, Bob) input pairs.

    Entry ``[i, j]`` is <a_i|a_j><b_i|b_j> with rows ordered by
    :meth:`ProtocolSpec.index`.
    """
    return np.kron(_overlap_matrix(p.alice_list()), _overlap_matrix(p.bob_list()))


def _phase_conventions(num_bases: int) -> Conventions:
    # Appendix-style readout: key labels |+>,|->, Z correction on psi_minus,
    # phase error read from Y (x) Y with target psi_plus.
    errors = {}
    for g in range(num_bases):
        errors[(g, "psi_plus")] = False
        errors[(g, "psi_minus")] = True
    return Conventions(
        key_labels=(KET_PLUS, KET_MINUS),
        corrections={"psi_plus": PAULI_I, "psi_minus": PAULI_Z},
        observable=np.kron(PAULI_Y, PAULI_Y),
        error_on_equal=errors,
        test_labels=(KET_MINUS_I, KET_PLUS_I),
    )


def _decoy_conventions() -> Conventions:
    # time-bin single photons: in Z both conclusive outcomes anticorrelate the
    # bits, in X psi_plus correlates and psi_minus anticorrelates them
    errors = {
        (0, "psi_plus"): True,
        (0, "psi_minus"): True,
        (1, "psi_plus"): False,
        (1, "psi_minus"): True,
    }
    return Conventions(
        key_labels=(KET_0, KET_1),
        corrections={"psi_plus": PAULI_X, "psi_minus": PAULI_Z @ PAULI_X},
        observable=np.kron(PAULI_X, PAULI_X),
        error_on_equal=errors,
        test_labels=(KET_PLUS, KET_MINUS),
    )


def _check_nonneg(**values: float) -> None:
    for name, v in values.items():
        if v < 0:
            raise ValueError(f"{name} must be nonnegative, got {v!r}")


def build_protocol(
    family: Family | str,
    *,
    mu: float | None = None,
    mus: tuple[float, ...] | list[float] | None = None,
    num_bases: int = 2,
    nu: float = 0.0,
    key_basis: int = 0,
) -> ProtocolSpec:
    """Construct one of the four protocol families.

    Parameters
    ----------
    family : Family or str
        ``phase_encoding``, ``phase_encoding_tha``, ``decoy_tha`` or
        ``phase_matching``.
    mu : float, optional
        Common signal intensity (phase-encoding families).
    mus : sequence of float, optional
        Per-basis intensities (phase matching).
    num_bases : int
        Number of bases M; basis x carries phase x*pi/M.
    nu : float
        Intensity of the reflected Trojan-horse light.

    Alice and Bob always use the same family of states.
    """
    family = Family(family)
    _check_nonneg(nu=nu)

    if family is Family.DECOY_THA:
        return _build_decoy(nu)

    if num_bases < 1:
        raise ValueError("num_bases must be >= 1")
    if family is Family.PHASE_MATCHING:
        if mus is None:
            raise ValueError("phase matching needs per-basis intensities 'mus'")
        mus = tuple(float(m) for m in mus)
        if len(mus) != num_bases:
            raise ValueError("need one intensity per basis")
    else:
        if mu is None:
            raise ValueError(f"{family.value} needs a signal intensity 'mu'")
        mus = (float(mu),) * num_bases
    _check_nonneg(**{f"mu[{i}]": m for i, m in enumerate(mus)})

    with_trojan = family is Family.PHASE_ENCODING_THA
    states = {}
    for x in range(num_bases):
        phase = cmath.exp(1j * math.pi * x / num_bases)
        for a in (0, 1):
            sign = -1.0 if a else 1.0
            factors: list[StateFactor] = [Coherent(sign * phase * math.sqrt(mus[x]))]
            if with_trojan:
                factors.append(Coherent(sign * phase * math.sqrt(nu)))
            states[(a, x)] = PureState(tuple(factors))
    return ProtocolSpec(
        family=family,
        alice_states=states,
        bob_states=dict(states),
        num_bases=num_bases,
        key_basis=key_basis,
        conventions=_phase_conventions(num_bases),
        intensities=mus,
        trojan_intensity=nu if with_trojan else 0.0,
    )


def _build_decoy(nu: float) -> ProtocolSpec:
    s = math.sqrt(nu)
    h = math.sqrt(nu / 2)
    states = {
        (0, 0): PureState((Qubit.from_vector(KET_0), Coherent(s), Coherent(0))),
        (1, 0): PureState((Qubit.from_vector(KET_1), Coherent(0), Coherent(s))),
        (0, 1): PureState((Qubit.from_vector(KET_PLUS), Coherent(h), Coherent(h))),
        (1, 1): PureState((Qubit.from_vector(KET_MINUS), Coherent(h), Coherent(-h))),
    }
    return ProtocolSpec(
        family=Family.DECOY_THA,
        alice_states=states,
        bob_states=dict(states),
        num_bases=2,
        key_basis=0,
        conventions=_decoy_conventions(),
        intensities=(),
        trojan_intensity=nu,
    )
