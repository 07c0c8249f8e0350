"""The phase-error SDP over Gram blocks of Eve's conclusive vectors.

For each conclusive announcement z in {psi_plus, psi_minus} the variable
``G^z`` is the d x d Gram matrix of Eve's (unnormalised) vectors
``|e^z_{x a y b}>``. The inconclusive block never enters a functional, so it
is eliminated: the only trace of it is the residual cone
``Lambda - G^+ - G^- >= 0`` (``t Lambda - G^+ - G^- >= 0`` for the
homogenised decoy problem).

Every linear functional is written as ``<C, G> = Re sum_ij conj(C_ij) G_ij``
with Hermitian ``C``, so it is real on Hermitian arguments.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .channel import ObservedStats
from .frames import frame_defect, protocol_frame
from .states import ANNOUNCEMENTS, ProtocolSpec, lambda_matrix

HERMITIAN_TOL = 1e-12
CAP_LABEL = "e_ph_cap"
# a stored frame F must satisfy F F^H >= lam - FRAME_TOL (1 + ||lam||) I
FRAME_TOL = 1e-12
DEFAULT_FRAME_FLOOR = 1e-12


def _inner(C: np.ndarray, G: np.ndarray) -> float:
    return float(np.real(np.vdot(C, G)))


@dataclass(frozen=True)
class HermitianCoeff:
    """Coefficient matrix of a functional on one announcement block."""

    block: str
    matrix: np.ndarray

    def __post_init__(self):
        if self.block not in ANNOUNCEMENTS:
            raise ValueError(f"unknown announcement block {self.block!r}")
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("coefficient must be a square matrix")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("coefficient matrix is not Hermitian")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class Functional:
    """Real linear functional ``<C+, G+> + <C-, G-> + t_coeff * t``."""

    plus: np.ndarray
    minus: np.ndarray
    t_coeff: float = 0.0

    @classmethod
    def from_coeffs(cls, dim: int, coeffs: list[HermitianCoeff], t_coeff: float = 0.0) -> "Functional":
        blocks = {z: np.zeros((dim, dim), dtype=complex) for z in ANNOUNCEMENTS}
        for c in coeffs:
            blocks[c.block] = blocks[c.block] + c.matrix
        return cls(blocks["psi_plus"], blocks["psi_minus"], float(t_coeff))

    def block(self, z: str) -> np.ndarray:
        return self.plus if z == "psi_plus" else self.minus

    def coeffs(self) -> list[HermitianCoeff]:
        return [HermitianCoeff(z, self.block(z)) for z in ANNOUNCEMENTS]

    def evaluate(self, g_plus: np.ndarray, g_minus: np.ndarray, t: float = 0.0) -> float:
        return _inner(self.plus, g_plus) + _inner(self.minus, g_minus) + self.t_coeff * t

    def scaled(self, k: float) -> "Functional":
        return Functional(k * self.plus, k * self.minus, k * self.t_coeff)

    def __add__(self, other: "Functional") -> "Functional":
        return Functional(self.plus + other.plus, self.minus + other.minus, self.t_coeff + other.t_coeff)


@dataclass(frozen=True)
class Constraint:
    """``lower <= functional <= upper``; equal bounds make an equality."""

    functional: Functional
    lower: float
    upper: float
    label: str

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValueError(f"constraint {self.label!r} has a NaN bound")
        if self.lower > self.upper:
            raise ValueError(f"constraint {self.label!r} has lower > upper")

    @property
    def is_equality(self) -> bool:
        return self.lower == self.upper


@dataclass(frozen=True)
class PhaseErrorFunctional:
    """``e_ph(G) = constant + <C+, G+> + <C-, G->``.

    ``scale`` is the conclusive probability the coefficients were divided by.
    """

    constant: float
    plus: np.ndarray
    minus: np.ndarray
    scale: float

    def evaluate(self, g_plus: np.ndarray, g_minus: np.ndarray) -> float:
        return self.constant + _inner(self.plus, g_plus) + _inner(self.minus, g_minus)

    def as_functional(self) -> Functional:
        return Functional(self.plus, self.minus)


@dataclass(frozen=True)
class BoundedStats:
    """Interval statistics of the single-photon events (decoy protocols).

    ``yield_lower[g]`` lower-bounds the conclusive probability in basis g and
    ``error_upper[g]`` upper-bounds the error rate in basis g.
    """

    yield_lower: dict[int, float]
    error_upper: dict[int, float]

    def __post_init__(self):
        for g, y in self.yield_lower.items():
            if not 0.0 < y <= 1.0:
                raise ValueError(f"yield lower bound in basis {g} must lie in (0, 1], got {y!r}")
        for g, e in self.error_upper.items():
            if not 0.0 <= e <= 1.0:
                raise ValueError(f"error upper bound in basis {g} must lie in [0, 1], got {e!r}")


@dataclass(frozen=True)
class SdpProblem:
    """Maximise ``constant + objective(G, t)`` over the Gram blocks.

    Non-homogenised problems have ``t`` fixed to 1 and the residual cone
    ``lam - G+ - G- >= 0``. Homogenised ones carry a free scalar ``t >= 0``,
    the residual ``t lam - G+ - G- >= 0`` and a finite ``t_bound`` with
    ``t <= t_bound`` implied by the constraints.
    """

    dim: int
    lam: np.ndarray
    objective: Functional
    constant: float
    constraints: tuple[Constraint, ...]
    cap: float | None = 0.5
    homogenized: bool = False
    t_bound: float = 1.0
    frame: np.ndarray | None = None

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=complex)
        if lam.shape != (self.dim, self.dim):
            raise ValueError("lambda matrix has the wrong shape")
        if np.max(np.abs(lam - lam.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("lambda matrix is not Hermitian")
        if self.homogenized and not (math.isfinite(self.t_bound) and self.t_bound >= 0):
            raise ValueError("homogenised problems need a finite t_bound")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.frame is not None:
            frame = np.asarray(self.frame, dtype=complex)
            if frame.ndim != 2 or frame.shape[0] != self.dim or frame.shape[1] < 1:
                raise ValueError("frame must have one row per input pair")
            defect = frame_defect(frame, lam)
            if defect > FRAME_TOL * (1.0 + float(np.linalg.norm(lam))):
                raise ValueError(f"frame does not dominate the lambda matrix (defect {defect:.3g})")
            object.__setattr__(self, "frame", frame)

    @property
    def is_complex(self) -> bool:
        mats = [self.lam, self.objective.plus, self.objective.minus]
        for c in self.constraints:
            mats += [c.functional.plus, c.functional.minus]
        return any(np.max(np.abs(m.imag), initial=0.0) > 0 for m in mats)

    def value(self, g_plus, g_minus, t: float = 1.0) -> float:
        return self.constant + self.objective.evaluate(g_plus, g_minus, t)

    def violation(self, g_plus, g_minus, t: float = 1.0) -> float:
        """Largest violation of any constraint or cone at a candidate point."""
        worst = 0.0
        for c in self.constraints:
            v = c.functional.evaluate(g_plus, g_minus, t)
            worst = max(worst, c.lower - v, v - c.upper)
        scale = t if self.homogenized else 1.0
        for m in (g_plus, g_minus, scale * self.lam - g_plus - g_minus):
            worst = max(worst, -float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0]))
        return worst

    def with_objective_scaled(self, k: float) -> "SdpProblem":
        cons = []
        for c in self.constraints:
            if c.label == CAP_LABEL:
                c = Constraint(c.functional.scaled(k), k * c.lower if math.isfinite(c.lower) else c.lower,
                               k * c.upper, c.label)
            cons.append(c)
        cap = None if self.cap is None else k * self.cap
        return SdpProblem(self.dim, self.lam, self.objective.scaled(k), k * self.constant,
                          tuple(cons), cap, self.homogenized, self.t_bound, self.frame)


# ---------------------------------------------------------------------------
# functionals


def _key_index_pairs(p: ProtocolSpec):
    g = p.key_basis
    return [((a, b), p.index(g, a, g, b)) for a in (0, 1) for b in (0, 1)]


def phase_error_functional(p: ProtocolSpec, p_pass: float = 1.0) -> PhaseErrorFunctional:
    """Phase-error rate of the key-basis events as a functional of the blocks.

    The virtual source entangles a qubit label with each key-basis code
    state, Bob corrects his label with the unitary attached to the
    announcement, and the error is the -1 outcome of the conjugate-basis
    observable. With ``W`` that observable and ``U_z`` the correction, the
    post-selected expectation is ``(1/4P) sum_z sum_ij M^z_ij G^z_ij`` with
    ``M^z_ij = <k_a' U_z k_b'| W |k_a U_z k_b>`` for ``i = (a', b')`` and
    ``j = (a, b)``; ``e_ph = (1 - <W>)/2``.

    A zero ``p_pass`` is replaced by 1; the statistics then force the key
    blocks to vanish and the cap makes the optimum 1/2.
    """
    if p.key_basis is None:
        raise ValueError("protocol has no designated key basis")
    if p_pass < 0 or not math.isfinite(p_pass):
        raise ValueError("p_pass must be a finite nonnegative number")
    scale = p_pass if p_pass > 0 else 1.0
    conv = p.conventions
    d = p.dim
    k0, k1 = conv.key_labels
    labels = (k0, k1)
    pairs = _key_index_pairs(p)
    blocks = {}
    for z in ANNOUNCEMENTS:
        u = conv.corrections[z]
        kets = {ab: np.kron(labels[ab[0]], u @ labels[ab[1]]) for ab, _ in pairs}
        C = np.zeros((d, d), dtype=complex)
        for ab_i, i in pairs:
            for ab_j, j in pairs:
                m_ij = np.vdot(kets[ab_i], conv.observable @ kets[ab_j])
                C[i, j] = -np.conj(m_ij) / (8.0 * scale)
        blocks[z] = (C + C.conj().T) / 2
    return PhaseErrorFunctional(0.5, blocks["psi_plus"], blocks["psi_minus"], scale)


@dataclass(frozen=True)
class StatisticFunctional:
    """Conclusive mass (``kind='pass'``) or error mass (``kind='error'``) of one basis."""

    basis: int
    kind: str
    functional: Functional

    def coeffs(self) -> list[HermitianCoeff]:
        return self.functional.coeffs()


def statistics_functionals(p: ProtocolSpec) -> list[StatisticFunctional]:
    """Pass and error-mass functionals for every matched basis.

    Both are diagonal: the pass probability weights every norm
    ``<e^z_i|e^z_i>`` of the matched-basis rows by the bit prior, and the error
    mass keeps only the rows whose bit relation counts as an error for that
    announcement.
    """
    d = p.dim
    out = []
    for g in range(p.num_bases):
        pass_blocks = {z: np.zeros((d, d), dtype=complex) for z in ANNOUNCEMENTS}
        err_blocks = {z: np.zeros((d, d), dtype=complex) for z in ANNOUNCEMENTS}
        for a in (0, 1):
            for b in (0, 1):
                i = p.index(g, a, g, b)
                w = float(p.bit_weights[a, b])
                for z in ANNOUNCEMENTS:
                    pass_blocks[z][i, i] = w
                    if (a == b) == p.conventions.error_on_equal[(g, z)]:
                        err_blocks[z][i, i] = w
        out.append(StatisticFunctional(g, "pass", Functional(pass_blocks["psi_plus"], pass_blocks["psi_minus"])))
        out.append(StatisticFunctional(g, "error", Functional(err_blocks["psi_plus"], err_blocks["psi_minus"])))
    return out


def _by_basis(p: ProtocolSpec):
    table = {}
    for sf in statistics_functionals(p):
        table[(sf.basis, sf.kind)] = sf.functional
    return table


def _check_observed(p: ProtocolSpec, observed: ObservedStats) -> None:
    for g in range(p.num_bases):
        if g not in observed.p_pass or g not in observed.e_bit:
            raise ValueError(f"observed statistics lack basis {g}")
        pp, eb = observed.p_pass[g], observed.e_bit[g]
        if not 0.0 <= pp <= 1.0:
            raise ValueError(f"observed P_pass in basis {g} must lie in [0, 1], got {pp!r}")
        if not 0.0 <= eb <= 1.0:
            raise ValueError(f"observed e_bit in basis {g} must lie in [0, 1], got {eb!r}")


def _cap_constraint(objective: Functional, constant: float, cap: float) -> Constraint:
    return Constraint(objective, -math.inf, cap - constant, CAP_LABEL)


def assemble_sdp(
    p: ProtocolSpec,
    observed: ObservedStats | BoundedStats,
    cap: float = 0.5,
    frame_floor: float = DEFAULT_FRAME_FLOOR,
) -> SdpProblem:
    """Build the phase-error maximisation for a protocol and its statistics.

    Exact statistics (``ObservedStats``) become equalities on the pass
    probability and on the error mass ``e_bit * P_pass`` of every matched
    basis. Interval statistics (``BoundedStats``) yield a homogenised
    problem: with ``t = 1/P_key`` the key-basis pass mass is normalised to 1,
    ``t`` ranges over ``[1, 1/Y_key^L]`` and every other bound is scaled by t.

    The problem carries the state-derived frame of :func:`protocol_frame`
    built with ``frame_floor``.
    """
    d = p.dim
    lam = lambda_matrix(p)
    table = _by_basis(p)
    frame = protocol_frame(p, frame_floor)
    if isinstance(observed, BoundedStats):
        return _assemble_bounded(p, observed, lam, table, cap, frame)
    _check_observed(p, observed)
    key = p.key_basis
    phase = phase_error_functional(p, observed.p_pass[key])
    objective = phase.as_functional()
    cons = []
    for g in range(p.num_bases):
        pp = float(observed.p_pass[g])
        cons.append(Constraint(table[(g, "pass")], pp, pp, f"pass[{g}]"))
        mass = float(observed.e_bit[g]) * pp
        cons.append(Constraint(table[(g, "error")], mass, mass, f"error[{g}]"))
    cons.append(_cap_constraint(objective, phase.constant, cap))
    return SdpProblem(d, lam, objective, phase.constant, tuple(cons), cap, False, 1.0, frame)


def _assemble_bounded(p, observed: BoundedStats, lam, table, cap, frame) -> SdpProblem:
    key = p.key_basis
    if key not in observed.yield_lower:
        raise ValueError("bounded statistics lack the key basis")
    y_key = float(observed.yield_lower[key])
    t_bound = 1.0 / y_key
    phase = phase_error_functional(p, 1.0)
    objective = phase.as_functional()
    t_only = Functional(np.zeros((p.dim, p.dim), complex), np.zeros((p.dim, p.dim), complex), 1.0)
    cons = [
        Constraint(table[(key, "pass")], 1.0, 1.0, f"pass[{key}]"),
        Constraint(t_only, 1.0, t_bound, "scale"),
    ]
    if key in observed.error_upper:
        cons.append(Constraint(table[(key, "error")], -math.inf, float(observed.error_upper[key]), f"error[{key}]"))
    for g in range(p.num_bases):
        if g == key:
            continue
        pass_g = table[(g, "pass")]
        if g in observed.yield_lower:
            y = float(observed.yield_lower[g])
            cons.append(Constraint(pass_g + t_only.scaled(-y), 0.0, math.inf, f"pass_lower[{g}]"))
        cons.append(Constraint(pass_g + t_only.scaled(-1.0), -math.inf, 0.0, f"pass_upper[{g}]"))
        if g in observed.error_upper:
            e = float(observed.error_upper[g])
            cons.append(Constraint(table[(g, "error")] + pass_g.scaled(-e), -math.inf, 0.0, f"error[{g}]"))
    cons.append(_cap_constraint(objective, phase.constant, cap))
    return SdpProblem(p.dim, lam, objective, phase.constant, tuple(cons), cap, True, t_bound, frame)


# ---------------------------------------------------------------------------
# plain-text serialisation
#
#   mdisdp-problem 1
#   dim <d>
#   homogenized <0|1>
#   t_bound <float>
#   constant <float>
#   cap <float|none>
#   constraints <K>
#   lambda
#   <d rows of d entries "re,im">
#   frame <r|none>
#   <d rows of r entries "re,im">                     (when r is given)
#   objective <t_coeff>
#   <d rows psi_plus> <d rows psi_minus>
#   constraint <label> <lower> <upper> <t_coeff>      (K times)
#   <d rows psi_plus> <d rows psi_minus>
#
# Floats use 17 significant digits, infinities are written "inf"/"-inf".

_MAGIC = "mdisdp-problem 1"


def _fmt(x: float) -> str:
    return "%.17g" % x


def _write_matrix(out: TextIO, m: np.ndarray) -> None:
    for row in m:
        out.write(" ".join(f"{_fmt(v.real)},{_fmt(v.imag)}" for v in row))
        out.write("\n")


def write_problem(problem: SdpProblem, out: TextIO) -> None:
    out.write(_MAGIC + "\n")
    out.write(f"dim {problem.dim}\n")
    out.write(f"homogenized {int(problem.homogenized)}\n")
    out.write(f"t_bound {_fmt(problem.t_bound)}\n")
    out.write(f"constant {_fmt(problem.constant)}\n")
    out.write(f"cap {'none' if problem.cap is None else _fmt(problem.cap)}\n")
    out.write(f"constraints {len(problem.constraints)}\n")
    out.write("lambda\n")
    _write_matrix(out, problem.lam)
    if problem.frame is None:
        out.write("frame none\n")
    else:
        out.write(f"frame {problem.frame.shape[1]}\n")
        _write_matrix(out, problem.frame)
    out.write(f"objective {_fmt(problem.objective.t_coeff)}\n")
    _write_matrix(out, problem.objective.plus)
    _write_matrix(out, problem.objective.minus)
    for c in problem.constraints:
        if any(ch.isspace() for ch in c.label):
            raise ValueError("constraint labels must not contain whitespace")
        out.write(f"constraint {c.label} {_fmt(c.lower)} {_fmt(c.upper)} {_fmt(c.functional.t_coeff)}\n")
        _write_matrix(out, c.functional.plus)
        _write_matrix(out, c.functional.minus)


def dumps_problem(problem: SdpProblem) -> str:
    buf = io.StringIO()
    write_problem(problem, buf)
    return buf.getvalue()


class _Lines:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise ValueError("unexpected end of problem file")

    def keyed(self, key: str) -> list[str]:
        parts = self.next().split()
        if parts[0] != key:
            raise ValueError(f"line {self.pos}: expected {key!r}, found {parts[0]!r}")
        return parts[1:]

    def matrix(self, d: int, cols: int | None = None) -> np.ndarray:
        cols = d if cols is None else cols
        m = np.empty((d, cols), dtype=complex)
        for r in range(d):
            fields = self.next().split()
            if len(fields) != cols:
                raise ValueError(f"line {self.pos}: expected {cols} entries, found {len(fields)}")
            for c, f in enumerate(fields):
                re, im = f.split(",")
                m[r, c] = complex(float(re), float(im))
        return m


def read_problem(src: TextIO | str) -> SdpProblem:
    text = src if isinstance(src, str) else src.read()
    rd = _Lines(text)
    if rd.next() != _MAGIC:
        raise ValueError("not a problem file (bad header)")
    d = int(rd.keyed("dim")[0])
    homog = bool(int(rd.keyed("homogenized")[0]))
    t_bound = float(rd.keyed("t_bound")[0])
    constant = float(rd.keyed("constant")[0])
    cap_s = rd.keyed("cap")[0]
    cap = None if cap_s == "none" else float(cap_s)
    k = int(rd.keyed("constraints")[0])
    rd.keyed("lambda")
    lam = rd.matrix(d)
    frame_s = rd.keyed("frame")[0]
    frame = None if frame_s == "none" else rd.matrix(d, int(frame_s))
    t_obj = float(rd.keyed("objective")[0])
    objective = Functional(rd.matrix(d), rd.matrix(d), t_obj)
    cons = []
    for _ in range(k):
        label, lo, hi, tc = rd.keyed("constraint")
        cons.append(Constraint(Functional(rd.matrix(d), rd.matrix(d), float(tc)), float(lo), float(hi), label))
    return SdpProblem(d, lam, objective, constant, tuple(cons), cap, homog, t_bound, frame)
