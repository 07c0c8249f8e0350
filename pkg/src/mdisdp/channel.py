"""Honest-device statistics: what Alice and Bob observe when Eve is passive.

Two measurement models are provided.

* Coherent-state interference (phase-encoding and phase-matching families):
  the two pulses meet on a balanced beam splitter followed by two threshold
  detectors D+ and D-. Psi+ is "only D+ clicks", Psi- is "only D- clicks".
* Time-bin Bell-state analyser (decoy-state family): phase-randomised weak
  coherent pulses, four (detector, time-bin) gates. Psi+ is a click pair on
  the same detector in both bins, Psi- a click pair on different detectors.

Detector efficiency is folded into the arm transmittance. Misalignment is a
phase offset on Bob's pulse for the interference model and a real mode
rotation for the time-bin model, both calibrated so that a single-photon
error rate equals ``e_ali``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .states import ANNOUNCEMENTS, Coherent, ProtocolSpec, PureState, state_overlap


@dataclass(frozen=True)
class DeviceParams:
    """Detector and channel parameters.

    ``total_loss_db``, when set, overrides the distance/efficiency model and
    fixes the end-to-end loss (detectors included); each arm then carries half
    of it.
    """

    p_dc: float
    eta_det: float
    xi_db_per_km: float = 0.2
    e_ali: float = 0.015
    distance_km: float = 0.0
    total_loss_db: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_dc <= 1.0:
            raise ValueError("p_dc must be a probability")
        if not 0.0 <= self.eta_det <= 1.0:
            raise ValueError("eta_det must lie in [0, 1]")
        if self.xi_db_per_km < 0:
            raise ValueError("fibre loss must be nonnegative")
        if not 0.0 <= self.e_ali <= 0.5:
            raise ValueError("e_ali must lie in [0, 0.5]")
        if self.distance_km < 0:
            raise ValueError("distance must be nonnegative")

    def at_distance(self, km: float) -> "DeviceParams":
        return replace(self, distance_km=float(km), total_loss_db=None)

    def at_total_loss(self, db: float) -> "DeviceParams":
        return replace(self, total_loss_db=float(db))

    @property
    def arm_transmittance(self) -> float:
        if self.total_loss_db is not None:
            return 10.0 ** (-self.total_loss_db / 20.0)
        fibre = 10.0 ** (-self.xi_db_per_km * (self.distance_km / 2.0) / 10.0)
        return self.eta_det * fibre

    @property
    def total_transmittance(self) -> float:
        return self.arm_transmittance ** 2

    @property
    def misalignment_phase(self) -> float:
        return 2.0 * math.asin(math.sqrt(self.e_ali))


PRESETS = {
    "parameter1": DeviceParams(p_dc=6.02e-6, eta_det=0.145, xi_db_per_km=0.20, e_ali=0.015),
    "parameter2": DeviceParams(p_dc=5e-8, eta_det=0.85, xi_db_per_km=0.20, e_ali=0.015),
}


def device_preset(name: str) -> DeviceParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown device preset {name!r}; known: {sorted(PRESETS)}") from None


@dataclass
class ObservedStats:
    """Observed statistics per matched basis (and per intensity pair for decoy).

    ``p_pass[g]`` and ``e_bit[g]`` are indexed by basis. ``detail`` holds the
    per-input conclusive probabilities ``[(x, a, y, b)][z]`` for the
    interference model. For the decoy model ``gains`` and ``qbers`` are keyed
    by ``(basis, i_alice, i_bob)`` with intensity indices into
    ``intensities``.
    """

    p_pass: dict[int, float] = field(default_factory=dict)
    e_bit: dict[int, float] = field(default_factory=dict)
    detail: dict[tuple[int, int, int, int], dict[str, float]] = field(default_factory=dict)
    gains: dict[tuple[int, int, int], float] = field(default_factory=dict)
    qbers: dict[tuple[int, int, int], float] = field(default_factory=dict)
    intensities: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    exact: bool = True


def _signal_amplitude(state) -> complex:
    f = state.factors[0]
    if not isinstance(f, Coherent):
        raise ValueError("interference model needs coherent signal modes")
    for g in state.factors[1:]:
        if not isinstance(g, Coherent):
            raise ValueError("interference model needs coherent-only states")
    return complex(f.amplitude)


def _click_pair(alpha: complex, beta: complex, eta: float, delta: float, p_dc: float):
    bb = beta * np.exp(1j * delta)
    i_plus = eta * abs(alpha + bb) ** 2 / 2
    i_minus = eta * abs(alpha - bb) ** 2 / 2
    q_plus = 1.0 - (1.0 - p_dc) * math.exp(-i_plus)
    q_minus = 1.0 - (1.0 - p_dc) * math.exp(-i_minus)
    return q_plus * (1.0 - q_minus), q_minus * (1.0 - q_plus)


def phase_protocol_stats(p: ProtocolSpec, dev: DeviceParams) -> ObservedStats:
    """Conclusive-event statistics for the coherent interference model.

    Only the first (signal) factor of each state reaches the measurement;
    Trojan-horse modes stay with Eve and do not change the detection.
    """
    eta = dev.arm_transmittance
    delta = dev.misalignment_phase
    conv = p.conventions
    out = ObservedStats()
    for x in range(p.num_bases):
        for y in range(p.num_bases):
            for a in (0, 1):
                for b in (0, 1):
                    alpha = _signal_amplitude(p.alice_states[(a, x)])
                    beta = _signal_amplitude(p.bob_states[(b, y)])
                    pp, pm = _click_pair(alpha, beta, eta, delta, dev.p_dc)
                    out.detail[(x, a, y, b)] = {"psi_plus": pp, "psi_minus": pm}
    for g in range(p.num_bases):
        total = 0.0
        err = 0.0
        for a in (0, 1):
            for b in (0, 1):
                w = p.bit_weights[a, b]
                probs = out.detail[(g, a, g, b)]
                for z in ANNOUNCEMENTS:
                    total += w * probs[z]
                    if (a == b) == conv.error_on_equal[(g, z)]:
                        err += w * probs[z]
        out.p_pass[g] = total
        out.e_bit[g] = err / total if total > 0 else 0.0
    return out


def _vacuum_overlap(gamma: complex) -> float:
    return math.exp(-abs(gamma) ** 2 / 2)


def honest_gram_blocks(p: ProtocolSpec, dev: DeviceParams) -> tuple[np.ndarray, np.ndarray]:
    """Gram matrices of Eve's conclusive vectors for the passive channel.

    Eve keeps the Trojan modes, the light lost in the fibre, the detector
    modes after the click projection and a classical dark-count flag; the
    inner product of two such vectors is the product of the mode overlaps,
    summed over the flag values.
    """
    eta = dev.arm_transmittance
    delta = dev.misalignment_phase
    p_dc = dev.p_dc
    d = p.dim
    rows = []
    for x in range(p.num_bases):
        for a in (0, 1):
            for y in range(p.num_bases):
                for b in (0, 1):
                    sa = p.alice_states[(a, x)]
                    sb = p.bob_states[(b, y)]
                    alpha = _signal_amplitude(sa)
                    beta = _signal_amplitude(sb) * np.exp(1j * delta)
                    rows.append((sa, sb, alpha, beta))
    assert len(rows) == d

    g_plus = np.empty((d, d), dtype=complex)
    g_minus = np.empty((d, d), dtype=complex)
    s_eta = math.sqrt(eta)
    s_loss = math.sqrt(max(0.0, 1.0 - eta))
    for i, (sa_i, sb_i, al_i, be_i) in enumerate(rows):
        for j, (sa_j, sb_j, al_j, be_j) in enumerate(rows):
            trojan = 1.0 + 0.0j
            if len(sa_i.factors) > 1:
                trojan *= state_overlap(PureState(sa_i.factors[1:]), PureState(sa_j.factors[1:]))
                trojan *= state_overlap(PureState(sb_i.factors[1:]), PureState(sb_j.factors[1:]))
            env = _coh(s_loss * al_i, s_loss * al_j) * _coh(s_loss * be_i, s_loss * be_j)
            gp_i = s_eta * (al_i + be_i) / math.sqrt(2)
            gm_i = s_eta * (al_i - be_i) / math.sqrt(2)
            gp_j = s_eta * (al_j + be_j) / math.sqrt(2)
            gm_j = s_eta * (al_j - be_j) / math.sqrt(2)
            common = trojan * env * (1.0 - p_dc)
            vac_m = _vacuum_overlap(gm_i) * _vacuum_overlap(gm_j)
            vac_p = _vacuum_overlap(gp_i) * _vacuum_overlap(gp_j)
            g_plus[i, j] = common * vac_m * (_coh(gp_i, gp_j) - (1.0 - p_dc) * vac_p)
            g_minus[i, j] = common * vac_p * (_coh(gm_i, gm_j) - (1.0 - p_dc) * vac_m)
    return g_plus, g_minus


def _coh(alpha: complex, beta: complex) -> complex:
    return complex(np.exp(-(abs(alpha) ** 2 + abs(beta) ** 2) / 2 + np.conj(alpha) * beta))


# ---------------------------------------------------------------------------
# time-bin Bell-state analyser

GATES = ("c_early", "c_late", "d_early", "d_late")
PSI_PLUS_PATTERNS = ((0, 1), (2, 3))
PSI_MINUS_PATTERNS = ((0, 3), (1, 2))
MIN_QUADRATURE_NODES = 8


def _mode_vectors(basis: int, bit: int) -> np.ndarray:
    """(early, late) amplitudes of a unit pulse for the time-bin encoding."""
    if basis == 0:
        return np.array([1.0, 0.0]) if bit == 0 else np.array([0.0, 1.0])
    s = 1.0 / math.sqrt(2.0)
    return np.array([s, s]) if bit == 0 else np.array([s, -s])


def _rotation(e_ali: float) -> np.ndarray:
    th = math.asin(math.sqrt(e_ali))
    return np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])


def pattern_probability(no_click, clicks: tuple[int, ...], n_gates: int = 4):
    """P(exactly the gates in ``clicks`` fire) by inclusion-exclusion.

    ``no_click(mask)`` returns the probability that none of the gates in the
    boolean ``mask`` fire.
    """
    silent = [g for g in range(n_gates) if g not in clicks]
    total = 0.0
    for r in range(len(clicks) + 1):
        for sub in itertools.combinations(clicks, r):
            mask = np.zeros(n_gates, dtype=bool)
            mask[silent] = True
            mask[list(sub)] = True
            total = total + (-1) ** r * no_click(mask)
    return total


def _gate_amplitudes(mu_a, mu_b, basis, a, b, phi_a, phi_b, eta, rot):
    """Output amplitudes at the four gates; phases broadcast."""
    va = math.sqrt(eta * mu_a) * _mode_vectors(basis, a)
    vb = math.sqrt(eta * mu_b) * (rot @ _mode_vectors(basis, b))
    ea = np.exp(1j * phi_a)
    eb = np.exp(1j * phi_b)
    A_e, A_l = va[0] * ea, va[1] * ea
    B_e, B_l = vb[0] * eb, vb[1] * eb
    r = 1.0 / math.sqrt(2.0)
    return [r * (A_e + B_e), r * (A_l + B_l), r * (A_e - B_e), r * (A_l - B_l)]


def _coherent_conclusive(mu_a, mu_b, basis, a, b, phi_a, phi_b, dev: DeviceParams):
    """Psi+ and Psi- probabilities at fixed phases.

    Coherent inputs leave the gates in a product of coherent states, so the
    gates click independently: a silent gate contributes ``(1 - p_dc) e^{-I}``
    and a clicking gate ``1 - (1 - p_dc) e^{-I}``, evaluated with ``expm1``
    so that coincidences far below one keep full relative precision.
    """
    amps = _gate_amplitudes(mu_a, mu_b, basis, a, b, phi_a, phi_b, dev.arm_transmittance, _rotation(dev.e_ali))
    log_silent = math.log1p(-dev.p_dc) - np.stack([np.abs(u) ** 2 for u in amps])
    silent = np.exp(log_silent)
    click = -np.expm1(log_silent)

    def exactly(clicks):
        prob = np.ones_like(silent[0])
        for g in range(len(GATES)):
            prob = prob * (click[g] if g in clicks else silent[g])
        return prob

    pp = sum(exactly(c) for c in PSI_PLUS_PATTERNS)
    pm = sum(exactly(c) for c in PSI_MINUS_PATTERNS)
    return pp, pm


def _gauss_legendre_phases(nodes: int):
    t, w = np.polynomial.legendre.leggauss(nodes)
    phi = math.pi * (t + 1.0)
    return phi, w / 2.0


def decoy_stats(
    intensities: tuple[float, ...] | tuple[tuple[float, ...], tuple[float, ...]],
    dev: DeviceParams,
    nodes: int = 64,
) -> ObservedStats:
    """Gains and QBERs of phase-randomised pulses for every intensity pair.

    ``intensities`` is ``(mu, zeta, omega)`` used by both sides, or a pair of
    such tuples. The average over the two independent uniform phases is a
    tensor Gauss-Legendre rule with ``nodes`` points per phase.
    """
    if nodes < MIN_QUADRATURE_NODES:
        raise ValueError(f"quadrature order must be >= {MIN_QUADRATURE_NODES}")
    if intensities and isinstance(intensities[0], (tuple, list)):
        ia, ib = tuple(intensities[0]), tuple(intensities[1])
    else:
        ia = ib = tuple(intensities)
    if any(m < 0 for m in ia + ib):
        raise ValueError("intensities must be nonnegative")
    phi, w = _gauss_legendre_phases(nodes)
    phi_a, phi_b = np.meshgrid(phi, phi, indexing="ij")
    weights = np.outer(w, w)
    errors = {
        0: {"psi_plus": True, "psi_minus": True},
        1: {"psi_plus": False, "psi_minus": True},
    }
    out = ObservedStats(intensities=(ia, ib))
    for basis in (0, 1):
        for i, mu_a in enumerate(ia):
            for j, mu_b in enumerate(ib):
                gain = 0.0
                err = 0.0
                for a in (0, 1):
                    for b in (0, 1):
                        pp, pm = _coherent_conclusive(mu_a, mu_b, basis, a, b, phi_a, phi_b, dev)
                        pp = float(np.sum(weights * pp))
                        pm = float(np.sum(weights * pm))
                        gain += 0.25 * (pp + pm)
                        for z, val in (("psi_plus", pp), ("psi_minus", pm)):
                            if (a == b) == errors[basis][z]:
                                err += 0.25 * val
                out.gains[(basis, i, j)] = gain
                out.qbers[(basis, i, j)] = err / gain if gain > 0 else 0.0
    out.p_pass = {g: out.gains[(g, 0, 0)] for g in (0, 1)}
    out.e_bit = {g: out.qbers[(g, 0, 0)] for g in (0, 1)}
    return out


def _two_photon_no_click(u: np.ndarray, w: np.ndarray, p_dc: float):
    """No-click probability on a gate mask for one photon in mode u and one in w.

    ``u`` and ``w`` are output-mode vectors over (4 gates, 4 loss modes) of two
    photons entering orthogonal input modes.
    """

    def no_click(mask):
        keep = np.ones(len(u), dtype=bool)
        keep[:4] = ~mask
        qu = np.where(keep, u, 0)
        qw = np.where(keep, w, 0)
        prob = np.vdot(qu, qu).real * np.vdot(qw, qw).real + abs(np.vdot(qu, qw)) ** 2
        return (1.0 - p_dc) ** int(mask.sum()) * prob

    return no_click


def single_photon_stats(dev: DeviceParams) -> dict[int, tuple[float, float]]:
    """Honest yield and error rate when each side emits exactly one photon.

    Returns ``{basis: (Y11, e11)}`` computed in the photon-number picture,
    independently of the coherent-state quadrature.
    """
    eta = dev.arm_transmittance
    rot = _rotation(dev.e_ali)
    r = 1.0 / math.sqrt(2.0)
    errors = {0: {"psi_plus": True, "psi_minus": True}, 1: {"psi_plus": False, "psi_minus": True}}
    out = {}
    for basis in (0, 1):
        gain = err = 0.0
        for a in (0, 1):
            for b in (0, 1):
                va = _mode_vectors(basis, a)
                vb = rot @ _mode_vectors(basis, b)
                s, l = math.sqrt(eta), math.sqrt(1 - eta)
                # gates: c_e, c_l, d_e, d_l ; loss: A_e, A_l, B_e, B_l
                u = np.array([r * s * va[0], r * s * va[1], r * s * va[0], r * s * va[1],
                              l * va[0], l * va[1], 0.0, 0.0], dtype=complex)
                w = np.array([r * s * vb[0], r * s * vb[1], -r * s * vb[0], -r * s * vb[1],
                              0.0, 0.0, l * vb[0], l * vb[1]], dtype=complex)
                nc = _two_photon_no_click(u, w, dev.p_dc)
                pp = sum(pattern_probability(nc, c) for c in PSI_PLUS_PATTERNS)
                pm = sum(pattern_probability(nc, c) for c in PSI_MINUS_PATTERNS)
                gain += 0.25 * (pp + pm)
                for z, val in (("psi_plus", pp), ("psi_minus", pm)):
                    if (a == b) == errors[basis][z]:
                        err += 0.25 * val
        out[basis] = (gain, err / gain if gain > 0 else 0.0)
    return out
