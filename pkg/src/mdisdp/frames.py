"""Factorisations ``L L^H >= lam`` of the inner-product matrix.

The solver writes every Gram block as ``G = L g L^H``. Two constructions are
available:

* :func:`gram_frame` works from ``lam`` alone through an eigendecomposition
  with a floor ``eps`` on every eigenvalue;
* :func:`protocol_frame` works from the states. Qubit factors contribute
  their own amplitude vectors, which span the exact range of ``lam``; coherent
  factors contribute a floored eigenframe of their distinct amplitudes.

The second matters when ``lam`` is singular (qubit code states). A floor on a
null direction lets ``g`` mix range and null space, and with a homogenising
scale ``t`` that mixing shifts linear functionals by about ``sqrt(eps) * t``.
Spanning the range exactly removes the effect.

Soundness of the product construction: if ``A' >= A >= 0`` and ``B' >= B >= 0``
then ``A' o B' >= A o B`` for the entrywise product and ``A' (x) B' >= A (x) B``
for the Kronecker product, so floored factors still dominate the true matrix.
"""
from __future__ import annotations

import numpy as np

from .states import Coherent, ProtocolSpec, PureState, coherent_overlap, state_overlap

_EPS = np.finfo(float).eps


def gram_frame(lam: np.ndarray, floor: float) -> tuple[np.ndarray, float]:
    """Return ``(L, eps)`` with ``L L^H >= lam`` and ``L`` invertible.

    ``eps >= floor`` also absorbs the residual of the computed
    eigendecomposition and the loss of orthogonality of ``V``.
    """
    lam = np.asarray(lam, dtype=complex)
    d = lam.shape[0]
    D, V = np.linalg.eigh(lam)
    recon = (V * D) @ V.conj().T
    err = np.linalg.norm(lam - recon)
    orth = np.linalg.norm(V.conj().T @ V - np.eye(d))
    scale = float(np.max(np.abs(D), initial=0.0))
    eps = floor + 4.0 * (err + orth * (scale + floor)) + 8.0 * d * _EPS * scale
    L = V * np.sqrt(np.maximum(D, 0.0) + eps)
    return L, float(eps)


def _factor_rows(factors, floor: float) -> np.ndarray:
    """Rows ``r_i`` with ``r_i . conj(r_j) >= <f_i|f_j>`` in the psd order."""
    if isinstance(factors[0], Coherent):
        amps = [complex(f.amplitude) for f in factors]
        distinct = list(dict.fromkeys(amps))
        gram = np.array([[coherent_overlap(a, b) for b in distinct] for a in distinct])
        L, _ = gram_frame(gram, floor)
        return L[[distinct.index(a) for a in amps]]
    return np.conj(np.array([f.amplitudes for f in factors], dtype=complex))


def party_frame(states: list[PureState], floor: float) -> np.ndarray:
    """Frame for one party's states (rows follow ``states``).

    Falls back to the eigenframe of the party's overlap matrix when the
    product construction would be wider than the number of states.
    """
    n = len(states)
    rows = np.ones((n, 1), dtype=complex)
    for k in range(len(states[0].factors)):
        f = _factor_rows([s.factors[k] for s in states], floor)
        rows = np.einsum("ia,ib->iab", rows, f).reshape(n, -1)
    if rows.shape[1] >= n:
        overlap = np.array([[state_overlap(s, t) for t in states] for s in states])
        rows, _ = gram_frame(overlap, floor)
    return rows


def protocol_frame(p: ProtocolSpec, floor: float) -> np.ndarray:
    """Frame ``L`` (``dim x r``) with ``L L^H >= lambda_matrix(p)``."""
    return np.kron(party_frame(p.alice_list(), floor), party_frame(p.bob_list(), floor))


def frame_defect(frame: np.ndarray, lam: np.ndarray) -> float:
    """``max(0, -lambda_min(frame frame^H - lam))``."""
    diff = frame @ frame.conj().T - lam
    return max(0.0, -float(np.linalg.eigvalsh((diff + diff.conj().T) / 2)[0]))
