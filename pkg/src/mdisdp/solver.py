"""Certified solves of the phase-error SDP and of small LPs.

Frame coordinates
-----------------
The inner-product matrix ``lam`` of weak coherent states is nearly singular
(eigenvalues down to 1e-13 at small intensities), which leaves the residual
cone ``lam - G+ - G- >= 0`` with almost no interior. The solver therefore works
in a congruence frame ``L`` (``dim x r``) with ``L L^H >= lam``: every block
is written ``G = L g L^H``, the residual becomes ``I - g+ - g- >= 0``
(``t I - g+ - g-`` when homogenised) and each coefficient ``C`` becomes
``L^H C L``. Because ``L L^H >= lam``, every feasible point of the original
problem maps to a feasible point in the frame, so any dual bound computed
there is an upper bound for the original problem.

The frame is the one stored with the problem (built from the states, see
:mod:`mdisdp.frames`) or, failing that, ``V diag(sqrt(max(D, 0) + eps))``
from ``lam = V D V^H`` with ``eps`` raised above the measured
eigendecomposition error.

Certificates
------------
A certificate holds one multiplier ``w_k`` per constraint, a Hermitian
``Z`` for the frame residual cone and the floor ``eps``. :func:`verify_certificate`
rebuilds the frame (stored frame, or ``lam`` with ``eps``) and forms

* ``S+- = Z + sum_k w_k L^H A+-_k L - L^H C+- L`` and ``Z``, which should be psd;
* for homogenised problems ``s_t = sum_k w_k a_k - trace(Z) - c_t >= 0``.

The bound is ``constant + sum_k (w_k^+ upper_k - w_k^- lower_k)`` plus
``trace(Z)`` when ``t`` is fixed to 1. Negative slack eigenvalues are not
rounded away: every frame block obeys ``trace(g) <= t_max * r``, so a slack
with ``lambda_min < 0`` costs at most ``|lambda_min| * t_max * r`` and the
bound is inflated by that amount (plus a floating-point allowance).

Interval constraints become two one-sided rows with their own nonnegative
slack variables. The residual equality is imposed entry by entry in the
Hermitian basis ``(E_kl + E_lk)/2`` and ``i (E_kl - E_lk)/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .conic import NONNEG, PSD, ConeBlock, ConicProgram, ConicResult, SolverOptions, solve_conic
from .frames import gram_frame
from .sdp_model import SdpProblem

_EPS = np.finfo(float).eps


def problem_frame(problem: SdpProblem, floor: float) -> np.ndarray:
    """The frame stored with the problem, else the floored eigenframe of ``lam``."""
    if problem.frame is not None:
        return problem.frame
    return gram_frame(problem.lam, floor)[0]


def _vanishing_rows(problem: SdpProblem) -> tuple[set[int], set[int], set[int]]:
    """Diagonal entries forced to zero, per block, and the constraints implying them.

    A constraint ``f(G) <= 0`` whose coefficients are diagonal and
    nonnegative in both blocks (and free of ``t``) forces ``G[i, i] = 0``, hence
    a zero row, for every index with a positive coefficient. Noiseless
    statistics produce such constraints (zero error mass).
    """
    zero_plus: set[int] = set()
    zero_minus: set[int] = set()
    implied: set[int] = set()
    for k, c in enumerate(problem.constraints):
        f = c.functional
        if f.t_coeff != 0.0 or c.upper != 0.0:
            continue
        diags = []
        for m in (f.plus, f.minus):
            dg = np.diag(m)
            if np.any(m - np.diag(dg)) or np.any(dg.imag != 0) or np.any(dg.real < 0):
                break
            diags.append(dg.real)
        else:
            zero_plus.update(np.nonzero(diags[0] > 0)[0].tolist())
            zero_minus.update(np.nonzero(diags[1] > 0)[0].tolist())
            implied.add(k)
    return zero_plus, zero_minus, implied


def _face_basis(L: np.ndarray, zero: set[int]) -> np.ndarray | None:
    """Orthonormal basis of the frame directions orthogonal to the zero rows.

    ``G[i, i] = L[i] g L[i]^H = 0`` with ``g >= 0`` means ``g`` annihilates
    ``L[i]^H``. Directions with singular value below ``1e-10`` relative are
    kept, which can only enlarge the feasible set. Returns None when nothing
    is removed.
    """
    if not zero:
        return None
    rows = L[sorted(zero)]
    _, sv, vh = np.linalg.svd(rows)
    rank = int(np.sum(sv > 1e-10 * max(sv[0], 1.0)))
    if rank == 0:
        return None
    return vh[rank:].conj().T


def _reduction(problem: SdpProblem, L: np.ndarray):
    zp, zm, implied = _vanishing_rows(problem)
    return _face_basis(L, zp), _face_basis(L, zm), implied


def _restrict(Q: np.ndarray | None, M: np.ndarray) -> np.ndarray:
    if Q is None:
        return M
    out = Q.conj().T @ M @ Q
    return (out + out.conj().T) / 2


def _congruence(L: np.ndarray, C: np.ndarray) -> np.ndarray:
    out = L.conj().T @ C @ L
    return (out + out.conj().T) / 2


__all__ = [
    "SolverOptions",
    "Certificate",
    "SolveReport",
    "VerificationResult",
    "LpReport",
    "solve",
    "verify_certificate",
    "solve_lp",
]


@dataclass
class Certificate:
    """Dual certificate in frame coordinates (see module docstring)."""

    multipliers: np.ndarray
    residual_dual: np.ndarray
    floor: float


@dataclass
class VerificationResult:
    passed: bool
    bound: float
    raw_bound: float
    inflation: float
    min_eigs: dict[str, float]
    t_slack: float | None
    message: str = ""


@dataclass
class SolveReport:
    status: str
    primal: float
    dual: float
    gap: float
    iterations: int
    certificate: Certificate | None
    verification: VerificationResult | None
    complementarity: float
    primal_infeasibility: float
    dual_infeasibility: float
    blocks: tuple[np.ndarray, np.ndarray] | None = None
    t: float | None = None
    history: list[tuple] = field(default_factory=list)

    @property
    def min_eigs(self) -> dict[str, float]:
        return {} if self.verification is None else self.verification.min_eigs

    @property
    def certified(self) -> bool:
        return self.status == "optimal" and self.verification is not None and self.verification.passed


# ---------------------------------------------------------------------------
# lowering


def _hermitian_basis(d: int, complex_data: bool):
    """Rows ``conj(vec(A))`` of the Hermitian basis used for the residual equality."""
    rows, cols, vals = [], [], []
    r = 0
    for k in range(d):
        rows.append(r)
        cols.append(k * d + k)
        vals.append(1.0)
        r += 1
    for k in range(d):
        for l in range(k + 1, d):
            rows += [r, r]
            cols += [k * d + l, l * d + k]
            vals += [0.5, 0.5]
            r += 1
    if complex_data:
        for k in range(d):
            for l in range(k + 1, d):
                # A = i (E_kl - E_lk)/2, so conj(A) = -i/2 at (k,l) and +i/2 at (l,k)
                rows += [r, r]
                cols += [k * d + l, l * d + k]
                vals += [-0.5j, 0.5j]
                r += 1
    dtype = complex if complex_data else float
    return sp.csr_matrix((np.array(vals, dtype=dtype), (rows, cols)), shape=(r, d * d))


@dataclass
class _Lowered:
    prog: ConicProgram
    rows: list[list[int]]
    residual_rows: np.ndarray
    basis: sp.csr_matrix
    t_index: int | None
    frame: np.ndarray
    floor: float
    complex: bool
    faces: tuple = (None, None)


def _frame_data(problem: SdpProblem, L: np.ndarray):
    """Objective and constraint coefficients carried into the frame."""
    obj = (_congruence(L, problem.objective.plus), _congruence(L, problem.objective.minus))
    cons = [(_congruence(L, c.functional.plus), _congruence(L, c.functional.minus)) for c in problem.constraints]
    return obj, cons


def _lower(problem: SdpProblem, floor: float) -> _Lowered:
    L = problem_frame(problem, floor)
    d = L.shape[1]
    obj, cons_data = _frame_data(problem, L)
    q_plus, q_minus, implied = _reduction(problem, L)
    mats = [L, *obj] + [m for pair in cons_data for m in pair]
    mats += [q for q in (q_plus, q_minus) if q is not None]
    cplx = any(np.max(np.abs(np.imag(m)), initial=0.0) > 0 for m in mats)
    dtype = complex if cplx else float

    def block_data(m):
        return np.asarray(m if cplx else np.real(m), dtype=dtype)

    def conj_row(m):
        return np.conj(block_data(m)).ravel()

    stat_rows_plus, stat_rows_minus = [], []
    lp_rows = []  # (row, col, val) in the nonneg block
    b = []
    rows_of = []
    n_lp = 0
    t_index = None
    if problem.homogenized:
        t_index = 0
        n_lp = 1
    for k, (c, (cp_, cm_)) in enumerate(zip(problem.constraints, cons_data)):
        mine = []
        sides = []
        if k in implied:
            # satisfied identically on the reduced face
            rows_of.append(mine)
            continue
        if c.is_equality:
            sides.append((c.lower, 0))
        else:
            if math.isfinite(c.upper):
                sides.append((c.upper, +1))
            if math.isfinite(c.lower):
                sides.append((c.lower, -1))
        for rhs, slack_sign in sides:
            r = len(b)
            stat_rows_plus.append(conj_row(cp_))
            stat_rows_minus.append(conj_row(cm_))
            if c.functional.t_coeff != 0.0:
                if t_index is None:
                    raise ValueError(f"constraint {c.label!r} uses t in a non-homogenised problem")
                lp_rows.append((r, t_index, c.functional.t_coeff))
            if slack_sign != 0:
                lp_rows.append((r, n_lp, float(slack_sign)))
                n_lp += 1
            b.append(rhs)
            mine.append(r)
        rows_of.append(mine)
    m_stat = len(b)
    basis = _hermitian_basis(d, cplx)
    ident_coords = np.real(basis @ np.eye(d, dtype=dtype).ravel())
    m_res = basis.shape[0]
    m = m_stat + m_res

    def stacked(rows):
        if not m_stat:
            return sp.csr_matrix((0, d * d), dtype=dtype)
        return sp.csr_matrix(np.array(rows).reshape(m_stat, d * d))

    A_plus = sp.vstack([stacked(stat_rows_plus), basis]).tocsr()
    A_minus = sp.vstack([stacked(stat_rows_minus), basis]).tocsr()
    A_res = sp.vstack([sp.csr_matrix((m_stat, d * d), dtype=dtype), basis]).tocsr()

    lr = [r for r, _, _ in lp_rows]
    lc = [c for _, c, _ in lp_rows]
    lv = [v for _, _, v in lp_rows]
    if problem.homogenized:
        diag_rows = np.nonzero(ident_coords)[0]
        lr += list(m_stat + diag_rows)
        lc += [t_index] * len(diag_rows)
        lv += list(-ident_coords[diag_rows])
        rhs_res = np.zeros(m_res)
    else:
        rhs_res = ident_coords
    A_lp = sp.csr_matrix((lv, (lr, lc)), shape=(m, n_lp))

    # restrict the Gram blocks to their faces: a row acting on G = Q h Q^H
    # acts on h through kron(Q, conj(Q))
    sizes = [d, d]
    c_blocks = [block_data(obj[0]), block_data(obj[1])]
    for i, (q, Ablk) in enumerate(((q_plus, A_plus), (q_minus, A_minus))):
        if q is None:
            continue
        qd = block_data(q)
        reduced = sp.csr_matrix(np.asarray(Ablk @ np.kron(qd, np.conj(qd))))
        if i == 0:
            A_plus = reduced
        else:
            A_minus = reduced
        sizes[i] = q.shape[1]
        c_blocks[i] = block_data(_restrict(q, obj[i]))

    c_lp = np.zeros(n_lp)
    if problem.homogenized:
        c_lp[t_index] = problem.objective.t_coeff
    blocks = [ConeBlock(PSD, sizes[0], cplx), ConeBlock(PSD, sizes[1], cplx), ConeBlock(PSD, d, cplx)]
    c = [c_blocks[0], c_blocks[1], np.zeros((d, d), dtype=dtype)]
    A = [A_plus, A_minus, A_res]
    if n_lp:
        blocks.append(ConeBlock(NONNEG, n_lp))
        c.append(c_lp)
        A.append(A_lp)
    prog = ConicProgram(blocks, c, A, np.concatenate([np.array(b, dtype=float), rhs_res]))
    return _Lowered(prog, rows_of, np.arange(m_stat, m), basis, t_index, L, floor, cplx, (q_plus, q_minus))


def _lift_certificate(low: _Lowered, y: np.ndarray, d: int) -> Certificate:
    w = np.array([float(np.sum(y[rows])) for rows in low.rows])
    z_vec = low.basis.conj().T @ y[low.residual_rows]
    Z = np.asarray(z_vec, dtype=complex).reshape(d, d)
    Z = (Z + Z.conj().T) / 2
    return Certificate(w, Z, low.floor)


# ---------------------------------------------------------------------------
# verification


_EPS_EXT = float(np.finfo(np.longdouble).eps)


def _gamma(n: int, unit: float) -> float:
    return n * unit / (1.0 - n * unit)


def _ext(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).astype(np.clongdouble)


def _ext_congruence(L: np.ndarray, C: np.ndarray) -> np.ndarray:
    return L.conj().T @ _ext(C) @ L


def _abs_congruence(abs_L: np.ndarray, C: np.ndarray) -> np.ndarray:
    return abs_L.T @ np.abs(C) @ abs_L


def _restrict_ext(Q: np.ndarray | None, M: np.ndarray, abs_M: np.ndarray):
    if Q is None:
        return M, abs_M
    abs_Q = np.abs(Q)
    Qe = _ext(Q)
    return Qe.conj().T @ M @ Qe, abs_Q.T @ abs_M @ abs_Q


def _min_eig(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=complex)
    if m.shape[0] == 0:
        # a slack on an empty face is trivially psd
        return math.inf
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


def _cholesky_ext(M: np.ndarray):
    """Upper Cholesky factor of the Hermitian part of ``M`` or ``None``."""
    n = M.shape[0]
    R = np.zeros_like(M)
    for k in range(n):
        col = R[:k, k]
        pivot = M[k, k].real - np.sum(np.abs(col) ** 2)
        if not pivot > 0:
            return None
        R[k, k] = np.sqrt(pivot)
        if k + 1 < n:
            R[k, k + 1:] = (M[k, k + 1:] - col.conj() @ R[:k, k + 1:]) / R[k, k]
    return R


def _psd_deficit(M: np.ndarray, estimate: float) -> float:
    """Certified ``delta >= 0`` with ``M + delta I >= 0`` for the matrix as stored.

    A Cholesky factorisation that completes in floating point is the exact
    factor of ``M + shift I + E`` with ``|E| <= gamma_{n+1} |R^H| |R|``
    entrywise; the complex arithmetic is covered by a factor four on ``n``.
    The shift starts at the double-precision estimate and grows until the
    factorisation completes.
    """
    n = M.shape[0]
    if n == 0:
        return 0.0
    scale = float(np.max(np.abs(M)))
    shift = max(0.0, -estimate)
    step = max(n * _EPS_EXT * scale, np.finfo(float).tiny)
    eye = np.eye(n, dtype=np.clongdouble)
    for _ in range(200):
        R = _cholesky_ext(M + shift * eye)
        if R is not None:
            abs_R = np.abs(R).astype(float)
            err = _gamma(4 * (n + 1), _EPS_EXT) * float(np.linalg.norm(abs_R.T @ abs_R))
            return shift + err
        shift += step
        step *= 2.0
    return math.inf


def verify_certificate(problem: SdpProblem, report_or_cert, cert_tol: float = 1e-9) -> VerificationResult:
    """Check a dual certificate against the problem data and return its bound.

    Accepts a :class:`SolveReport` or a bare :class:`Certificate`. Only the
    problem and the certificate are used: the frame is rebuilt from the
    problem and the certificate's floor, and all slacks are assembled from
    scratch in extended precision. The check passes when every slack
    eigenvalue and the ``t`` slack are at least ``-cert_tol`` and no
    multiplier pushes against an infinite bound.

    The bound is the dual objective plus an inflation that pays for any
    negative part of the slacks (certified by a shifted Cholesky
    factorisation) and for the rounding of the assembly, both weighted by the
    largest trace a frame block can have.
    """
    cert = report_or_cert.certificate if isinstance(report_or_cert, SolveReport) else report_or_cert
    if cert is None:
        raise ValueError("report carries no certificate")
    w = np.asarray(cert.multipliers, dtype=float)
    if w.shape != (len(problem.constraints),):
        raise ValueError("certificate has the wrong number of multipliers")
    L = problem_frame(problem, cert.floor)
    d = L.shape[1]
    Z = np.asarray(cert.residual_dual, dtype=complex)
    if Z.shape != (d, d):
        raise ValueError("certificate residual matrix has the wrong shape")
    Le = _ext(L)
    abs_L = np.abs(L)
    Ze = _ext(Z)
    s_plus = Ze - _ext_congruence(Le, problem.objective.plus)
    s_minus = Ze - _ext_congruence(Le, problem.objective.minus)
    # entrywise bounds on the magnitudes summed into each slack
    abs_plus = np.abs(Z) + _abs_congruence(abs_L, problem.objective.plus)
    abs_minus = np.abs(Z) + _abs_congruence(abs_L, problem.objective.minus)
    raw = problem.constant
    t_coeff_sum = -problem.objective.t_coeff
    message = ""
    terms = 2
    for wk, c in zip(w, problem.constraints):
        if wk == 0.0:
            continue
        terms += 1
        we = np.longdouble(wk)
        s_plus = s_plus + we * _ext_congruence(Le, c.functional.plus)
        s_minus = s_minus + we * _ext_congruence(Le, c.functional.minus)
        abs_plus = abs_plus + abs(wk) * _abs_congruence(abs_L, c.functional.plus)
        abs_minus = abs_minus + abs(wk) * _abs_congruence(abs_L, c.functional.minus)
        t_coeff_sum += wk * c.functional.t_coeff
        if wk > 0:
            if not math.isfinite(c.upper):
                message = f"positive multiplier on unbounded side of {c.label!r}"
                raw = math.inf
            else:
                raw += wk * c.upper
        else:
            if not math.isfinite(c.lower):
                message = f"negative multiplier on unbounded side of {c.label!r}"
                raw = math.inf
            else:
                raw += wk * c.lower
    trace_z = float(np.real(np.trace(Z)))
    t_slack = None
    if problem.homogenized:
        t_slack = t_coeff_sum - trace_z
        t_max = problem.t_bound
    else:
        raw += trace_z
        t_max = 1.0
    # on a reduced face only the restricted slack has to be psd; the implied
    # constraints carry no multiplier there
    q_plus, q_minus, implied = _reduction(problem, L)
    for k in implied:
        if w[k] != 0.0 and (q_plus is not None or q_minus is not None):
            message = message or f"multiplier on constraint {problem.constraints[k].label!r} removed by the reduction"
            raw = math.inf
    s_plus, abs_plus = _restrict_ext(q_plus, s_plus, abs_plus)
    s_minus, abs_minus = _restrict_ext(q_minus, s_minus, abs_minus)
    blocks = {"psi_plus": (s_plus, abs_plus), "psi_minus": (s_minus, abs_minus), "residual": (Ze, np.abs(Z))}
    # products and sums along one entry: the two congruences, the face
    # restriction and the running sum over terms
    depth = terms + 2 * L.shape[0] + 2 * d + 2
    eigs = {}
    deficit = 0.0
    for name, (m, abs_m) in blocks.items():
        eigs[name] = _min_eig(m)
        deficit += _psd_deficit(m, eigs[name])
        deficit += _gamma(depth, _EPS_EXT) * float(np.linalg.norm(abs_m))
    inflation = deficit * t_max * d
    if t_slack is not None:
        inflation += max(0.0, -t_slack) * t_max
    passed = math.isfinite(raw) and math.isfinite(inflation) and all(e >= -cert_tol for e in eigs.values())
    if t_slack is not None and t_slack < -cert_tol:
        passed = False
    if not passed and not message:
        message = "dual slack has eigenvalue below tolerance"
    return VerificationResult(passed, raw + inflation, raw, inflation, eigs, t_slack, message)


# ---------------------------------------------------------------------------
# solve


def _unlower_primal(low: _Lowered, res: ConicResult):
    L = low.frame
    h_plus, h_minus = res.X[0], res.X[1]
    q_plus, q_minus = low.faces
    if q_plus is not None:
        h_plus = q_plus @ h_plus @ q_plus.conj().T
    if q_minus is not None:
        h_minus = q_minus @ h_minus @ q_minus.conj().T
    g_plus = L @ h_plus @ L.conj().T
    g_minus = L @ h_minus @ L.conj().T
    t = float(res.X[3][low.t_index]) if low.t_index is not None else 1.0
    return (g_plus + g_plus.conj().T) / 2, (g_minus + g_minus.conj().T) / 2, t


def solve(problem: SdpProblem, opts: SolverOptions | None = None) -> SolveReport:
    """Maximise the problem and certify the result.

    ``dual`` is the verified upper bound (including any eigenvalue
    inflation); ``primal`` is the objective at the returned blocks, mapped
    back from the frame. The status is ``optimal`` only if the IPM converged,
    the certificate passes and the verified bound is within ``gap_tol`` of the
    primal value. For any other status ``dual`` is NaN unless the certificate
    still verifies, so no unverified number can be mistaken for a bound.
    """
    opts = opts or SolverOptions()
    low = _lower(problem, opts.frame_floor)
    # the certified bound adds rounding allowances on top of the IPM gap,
    # so the inner iteration aims one decade tighter
    res = solve_conic(low.prog, replace(opts, gap_tol=opts.gap_tol / 10))
    g_plus, g_minus, t = _unlower_primal(low, res)
    primal = problem.value(g_plus, g_minus, t)
    cert = _lift_certificate(low, res.y, low.frame.shape[1])
    ver = verify_certificate(problem, cert, opts.cert_tol)
    comp = float(sum(abs(np.real(np.vdot(x, s))) for x, s in zip(res.X, res.S)))
    status = res.status
    dual = ver.bound if ver.passed else math.nan
    gap = dual - primal
    if status == "stalled":
        # the best iterate is judged by its certificate and the gap below
        ok = res.primal_infeasibility <= 10 * opts.feas_tol
        status = "optimal" if ok else "numerical_failure"
    if status == "optimal":
        if not ver.passed:
            status = "numerical_failure"
        elif abs(gap) > opts.gap_tol * (1.0 + abs(primal) + abs(dual)):
            status = "numerical_failure"
    if status in ("infeasible", "unbounded"):
        dual = math.nan
        gap = math.nan
    return SolveReport(
        status=status,
        primal=primal,
        dual=dual,
        gap=gap,
        iterations=res.iterations,
        certificate=cert,
        verification=ver,
        complementarity=comp,
        primal_infeasibility=res.primal_infeasibility,
        dual_infeasibility=res.dual_infeasibility,
        blocks=(g_plus, g_minus),
        t=t,
        history=res.history,
    )


# ---------------------------------------------------------------------------
# linear programs


# linear programs are cheap, so their default stopping point is tighter than
# the SDP one; the interior primal then matches a vertex to about 1e-10
LP_GAP_TOL = 1e-10


@dataclass
class LpReport:
    status: str
    x: np.ndarray | None
    value: float
    bound: float
    y_ub: np.ndarray | None
    y_eq: np.ndarray | None
    iterations: int


def _lp_certified_bound(c, A_ub, b_ub, A_eq, b_eq, lo, hi, y_ub, y_eq) -> float:
    """Upper bound on ``max c'x`` from any multipliers ``y_ub >= 0``, ``y_eq``.

    ``c'x = y'Ax + (c - A'y)'x <= y'b + sum_j max over [lo_j, hi_j] of r_j x_j``.
    """
    r = np.array(c, dtype=float)
    val = 0.0
    if A_ub is not None and len(b_ub):
        y_ub = np.maximum(y_ub, 0.0)
        r -= A_ub.T @ y_ub
        val += float(b_ub @ y_ub)
    if A_eq is not None and len(b_eq):
        r -= A_eq.T @ y_eq
        val += float(b_eq @ y_eq)
    for rj, l, h in zip(r, lo, hi):
        if rj > 0:
            if not math.isfinite(h):
                return math.inf
            val += rj * h
        elif rj < 0:
            if not math.isfinite(l):
                return math.inf
            val += rj * l
    return val


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None,
             opts: SolverOptions | None = None) -> LpReport:
    """Maximise ``c'x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, bounds.

    ``bounds`` is a list of ``(lower, upper)`` pairs (``None`` means
    unbounded); the default is ``x >= 0``. Without ``opts`` the gap tolerance
    is :data:`LP_GAP_TOL`. The LP is the diagonal special case
    of the conic IPM: variables are split as ``x = lower + u`` (or
    ``x = u+ - u-`` when free) with ``u >= 0``, finite upper bounds get their
    own slack rows. ``bound`` is a certified upper bound recomputed from the
    returned multipliers.
    """
    opts = opts or SolverOptions(gap_tol=LP_GAP_TOL)
    c = np.asarray(c, dtype=float)
    n = len(c)
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if bounds is None:
        bounds = [(0.0, None)] * n
    lo = np.array([-math.inf if l is None else float(l) for l, _ in bounds])
    hi = np.array([math.inf if h is None else float(h) for _, h in bounds])
    if np.any(lo > hi):
        return LpReport("infeasible", None, math.nan, math.nan, None, None, 0)

    # column map: x_j = offset_j + sum_k T[j, k] u_k
    cols = []
    offset = np.zeros(n)
    for j in range(n):
        if math.isfinite(lo[j]):
            offset[j] = lo[j]
            cols.append((j, 1.0))
        elif math.isfinite(hi[j]):
            offset[j] = hi[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nu = len(cols)
    T = np.zeros((n, nu))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s
    ub_rows = [(A_ub[i], b_ub[i]) for i in range(len(b_ub))]
    for j in range(n):
        if math.isfinite(lo[j]) and math.isfinite(hi[j]):
            e = np.zeros(n)
            e[j] = 1.0
            ub_rows.append((e, hi[j]))
    m_ub = len(ub_rows)
    m_eq = len(b_eq)
    nvar = nu + m_ub
    A = np.zeros((m_eq + m_ub, nvar))
    rhs = np.zeros(m_eq + m_ub)
    for i in range(m_eq):
        A[i, :nu] = A_eq[i] @ T
        rhs[i] = b_eq[i] - A_eq[i] @ offset
    for i, (row, bi) in enumerate(ub_rows):
        A[m_eq + i, :nu] = row @ T
        A[m_eq + i, nu + i] = 1.0
        rhs[m_eq + i] = bi - row @ offset
    cvec = np.concatenate([c @ T, np.zeros(m_ub)])
    const = float(c @ offset)
    if A.shape[0] == 0:
        if np.any(cvec > 0):
            return LpReport("unbounded", None, math.inf, math.inf, None, None, 0)
        x = offset.copy()
        return LpReport("optimal", x, const, const, np.zeros(0), np.zeros(0), 0)

    prog = ConicProgram([ConeBlock(NONNEG, nvar)], [cvec], [sp.csr_matrix(A)], rhs)
    res = solve_conic(prog, opts)
    u = res.X[0]
    x = offset + T @ u[:nu]
    y = res.y
    y_eq = y[:m_eq]
    y_ub_all = y[m_eq:]
    y_ub = y_ub_all[: len(b_ub)]
    # multipliers of the finite-box rows fold into the bound through the box
    bound = _lp_certified_bound(c, A_ub, b_ub, A_eq, b_eq, lo, hi, y_ub, y_eq)
    value = float(c @ x)
    status = res.status
    if status == "stalled":
        status = "optimal" if res.primal_infeasibility <= 10 * opts.feas_tol else "numerical_failure"
    if status == "optimal" and not (bound - value <= 1e-6 * (1 + abs(value))):
        status = "numerical_failure"
    if status in ("infeasible", "unbounded"):
        x = None
        value = -math.inf if status == "infeasible" else math.inf
        bound = value
    return LpReport(status, x, value, bound, y_ub, y_eq, res.iterations)
