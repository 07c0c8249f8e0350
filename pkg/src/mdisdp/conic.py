"""Dense primal-dual interior-point method for small block conic programs.

The program is::

    maximize    sum_k <C_k, X_k>
    subject to  sum_k A_k(X_k) = b
                X_k psd (Hermitian or real symmetric) or X_k >= 0 elementwise

with dual ``minimize b'y  s.t.  sum_i y_i A_i - C = S,  S in cone``.

Search directions use the HKM scaling with a Mehrotra predictor-corrector
step. The start point need not be feasible. Constraint maps are stored as
sparse matrices whose row ``i`` is ``conj(vec(A_i))`` (row-major ``vec``), so
``A_k(X) = Re(A @ vec(X))`` and the Schur complement of a psd block is
``Re(A (X kron S^-T) A^H)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

PSD = "psd"
NONNEG = "nonneg"


@dataclass(frozen=True)
class ConeBlock:
    kind: str
    size: int
    complex: bool = False

    @property
    def nvec(self) -> int:
        return self.size * self.size if self.kind == PSD else self.size

    @property
    def dtype(self):
        return complex if self.complex else float


@dataclass
class ConicProgram:
    blocks: list[ConeBlock]
    c: list[np.ndarray]
    A: list[sp.csr_matrix]
    b: np.ndarray

    @property
    def m(self) -> int:
        return len(self.b)

    def apply(self, X: list[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.m)
        for blk, Ak, Xk in zip(self.blocks, self.A, X):
            out += np.real(Ak @ Xk.ravel())
        return out

    def adjoint(self, y: np.ndarray) -> list[np.ndarray]:
        out = []
        for blk, Ak in zip(self.blocks, self.A):
            v = Ak.conj().T @ y
            if blk.kind == PSD:
                V = v.reshape(blk.size, blk.size)
                out.append(_herm(V))
            else:
                out.append(np.real(v))
        return out

    def objective(self, X: list[np.ndarray]) -> float:
        return float(sum(_inner(Ck, Xk) for Ck, Xk in zip(self.c, X)))


# iterations without halving the worst residual before the loop gives up,
# provided the best iterate is already this accurate
STALL_WINDOW = 8
STALL_MERIT = 1e-6


@dataclass
class SolverOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-9
    max_iter: int = 200
    cert_tol: float = 1e-9
    step_fraction: float = 0.98
    # eigenvalue floor of the frame in which the Gram blocks are solved
    frame_floor: float = 1e-12
    trace: TextIO | None = None


@dataclass
class ConicResult:
    status: str
    X: list[np.ndarray]
    y: np.ndarray
    S: list[np.ndarray]
    primal: float
    dual: float
    iterations: int
    primal_infeasibility: float
    dual_infeasibility: float
    history: list[tuple] = field(default_factory=list)


def _herm(M: np.ndarray) -> np.ndarray:
    return (M + M.conj().T) / 2


def _inner(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.real(np.vdot(A, B)))


def _max_step(blk: ConeBlock, X: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha with X + alpha dX still in the cone."""
    if blk.kind == NONNEG:
        neg = dX < 0
        if not np.any(neg):
            return math.inf
        return float(np.min(-X[neg] / dX[neg]))
    if blk.size == 0:
        return math.inf
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    Li = sla.solve_triangular(L, np.eye(blk.size, dtype=L.dtype), lower=True)
    W = Li @ dX @ Li.conj().T
    lam = np.linalg.eigvalsh(_herm(W))[0]
    if lam >= 0:
        return math.inf
    return -1.0 / lam


def _inverse(blk: ConeBlock, S: np.ndarray) -> np.ndarray:
    if blk.kind == NONNEG:
        return 1.0 / S
    return _herm(np.linalg.inv(S))


class _RowOperator:
    """Constraint rows of one block split into a sparse and a dense part.

    Rows with few nonzeros (such as Hermitian-basis rows) are stored as a
    padded gather table; the remaining rows form a small dense matrix.
    Generic sparse-times-dense kernels are slow for complex data, and blocks
    that share the same sparse rows can be combined before multiplying.
    """

    SPARSE_ROW_LIMIT = 4

    def __init__(self, A: sp.csr_matrix):
        A = sp.csr_matrix(A)
        A.sum_duplicates()
        self.shape = A.shape
        counts = np.diff(A.indptr)
        self.sparse_rows = np.nonzero((counts <= self.SPARSE_ROW_LIMIT) & (counts > 0))[0]
        self.dense_rows = np.nonzero(counts > self.SPARSE_ROW_LIMIT)[0]
        width = int(counts[self.sparse_rows].max(initial=0))
        cols = np.zeros((len(self.sparse_rows), width), dtype=np.int64)
        vals = np.zeros((len(self.sparse_rows), width), dtype=A.dtype)
        for k, r in enumerate(self.sparse_rows):
            lo, hi = A.indptr[r], A.indptr[r + 1]
            cols[k, : hi - lo] = A.indices[lo:hi]
            vals[k, : hi - lo] = A.data[lo:hi]
        self.cols = cols
        self.vals = vals
        self.dense = A[self.dense_rows].toarray()
        self.key = (self.shape, self.sparse_rows.tobytes(), cols.tobytes(), vals.tobytes())
        rows = self.sparse_rows
        contiguous = len(rows) > 0 and rows[-1] - rows[0] + 1 == len(rows)
        self.sparse_index = slice(int(rows[0]), int(rows[-1]) + 1) if contiguous else rows
        # dense rows as matrices A_i (row i of the operator is conj(vec(A_i)))
        n = int(round(math.sqrt(self.shape[1])))
        self.dense_mats = np.conj(self.dense).reshape(len(self.dense_rows), n, n) if n * n == self.shape[1] else None

    def gather(self, K: np.ndarray, conj: bool = False) -> np.ndarray:
        """Sparse rows times ``K`` (``conj`` uses the conjugated coefficients)."""
        # fancy indexing is markedly faster than np.take(..., out=) here
        vals = np.conj(self.vals) if conj else self.vals
        dtype = np.result_type(vals.dtype, K.dtype)
        acc = None
        for p in range(self.cols.shape[1]):
            part = K[self.cols[:, p]].astype(dtype, copy=False)
            if not np.all(vals[:, p] == 1.0):
                part *= vals[:, p, None]
            if acc is None:
                acc = part
            else:
                acc += part
        if acc is None:
            return np.zeros((len(self.sparse_rows), K.shape[1]), dtype=dtype)
        return acc

    def _real_terms(self):
        # Re(v z) = Re(v) Re(z) - Im(v) Im(z). Each term reads one row of the
        # stacked array [Re K; Im K] (Im rows offset by the column count) with
        # a real coefficient; a purely imaginary v reads the Im row, and only
        # entries with both parts nonzero need a second term
        terms = getattr(self, "_terms", None)
        if terms is None:
            n = self.shape[1]
            terms = []
            for p in range(self.cols.shape[1]):
                v, cols = self.vals[:, p], self.cols[:, p]
                imaginary = (v.real == 0) & (v.imag != 0)
                coef = np.where(imaginary, -v.imag, v.real)
                terms.append((cols + n * imaginary, coef, bool(np.all(coef == 1.0))))
                mixed = (v.real != 0) & (v.imag != 0)
                if np.any(mixed):
                    terms.append((cols + n, np.where(mixed, -v.imag, 0.0), False))
            self._terms = terms
        return terms

    def gather_real(self, stacked: np.ndarray) -> np.ndarray:
        """``Re`` of sparse rows times ``K``, given ``stacked = [Re K; Im K]`` (real, contiguous)."""
        acc = np.zeros((len(self.sparse_rows), stacked.shape[1]))
        for rows, coef, unit in self._real_terms():
            part = stacked[rows]
            if not unit:
                part *= coef[:, None]
            acc += part
        return acc

    def left(self, K: np.ndarray, conj: bool = False) -> np.ndarray:
        """Return ``A @ K`` (or ``conj(A) @ K``) as a dense array."""
        dense = np.conj(self.dense) if conj else self.dense
        dtype = np.result_type(self.vals.dtype, dense.dtype, K.dtype)
        out = np.zeros((self.shape[0], K.shape[1]), dtype=dtype)
        if len(self.sparse_rows):
            out[self.sparse_rows] = self.gather(K, conj)
        if len(self.dense_rows):
            out[self.dense_rows] = dense @ K
        return out


def _operators(prog: ConicProgram) -> list[_RowOperator]:
    ops = getattr(prog, "_row_ops", None)
    if ops is None:
        ops = [_RowOperator(Ak) for Ak in prog.A]
        prog._row_ops = ops
    return ops


def _schur(prog: ConicProgram, X, Sinv) -> np.ndarray:
    """Schur matrix ``M_ij = sum_k Re tr(A_i X_k A_j S_k^-1)`` (Hermitian ``A_i``).

    Rows are split as ``A = [D; B]`` (dense, sparse). A dense row ``j``
    contributes the column ``Re(A vec(X A_j S^-1))``. The ``B K B^H`` part,
    ``K = kron(X, S^-T)``, of all blocks that share the same ``B`` is formed
    once from the summed ``K``.
    """
    m = prog.m
    M = np.zeros((m, m))
    shared: dict[tuple, list] = {}
    for op, blk, Ak, Xk, Sk in zip(_operators(prog), prog.blocks, prog.A, X, Sinv):
        if Ak.nnz == 0:
            continue
        if blk.kind == NONNEG:
            D = sp.diags(Xk * Sk)
            M += (Ak @ D @ Ak.T).toarray()
            continue
        if len(op.dense_rows):
            W = (Xk @ op.dense_mats @ Sk).reshape(len(op.dense_rows), -1)
            cols = np.real(op.left(np.ascontiguousarray(W.T)))  # (m, n_dense)
            M[:, op.dense_rows] += cols
            if len(op.sparse_rows):
                idx = op.sparse_index
                if isinstance(idx, slice):
                    M[op.dense_rows, idx] += cols[idx].T
                else:
                    M[np.ix_(op.dense_rows, idx)] += cols[idx].T
        if len(op.sparse_rows):
            shared.setdefault(op.key, [op, [], []])
            shared[op.key][1].append(Xk)
            shared[op.key][2].append(Sk)
    for op, xs, ss in shared.values():
        d = xs[0].shape[0]
        # sum_k kron(X_k, S_k^T) as one matrix product over the block index
        xs_flat = np.stack(xs).reshape(len(xs), d * d)
        st_flat = np.stack([s.T for s in ss]).reshape(len(ss), d * d)
        K = (xs_flat.T @ st_flat).reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
        T = op.gather(K)
        # B K B^H = B (B K)^H because K is Hermitian; only its real part enters M
        n = T.shape[1]
        stacked = np.empty((2 * n, T.shape[0]))
        stacked[:n] = T.real.T
        stacked[n:] = -T.imag.T  # conj(T).T
        U = op.gather_real(stacked)
        idx = op.sparse_index
        if isinstance(idx, slice):
            M[idx, idx] += U
        else:
            M[np.ix_(idx, idx)] += U
    return (M + M.T) / 2


def _factor(M: np.ndarray):
    diag = np.abs(np.diag(M))
    scale = max(1.0, float(diag.max(initial=0.0)))
    for reg in (0.0, 1e-14, 1e-12, 1e-10):
        try:
            return sla.cho_factor(M + reg * scale * np.eye(len(M)), check_finite=False)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            continue
    return None


def _solve(factor, M, rhs, refine: int = 2):
    if factor is None:
        return np.linalg.lstsq(M, rhs, rcond=None)[0]
    x = sla.cho_solve(factor, rhs, check_finite=False)
    for _ in range(refine):
        x = x + sla.cho_solve(factor, rhs - M @ x, check_finite=False)
    return x


def _start(prog: ConicProgram):
    n_total = sum(b.size for b in prog.blocks)
    norm_b = np.abs(prog.b)
    row_norms = np.sqrt(np.asarray(sum(abs(Ak).power(2).sum(axis=1) for Ak in prog.A))).ravel()
    c_norm = math.sqrt(sum(np.sum(np.abs(ck) ** 2) for ck in prog.c))
    xi = max(10.0, math.sqrt(n_total), float(np.max((1 + norm_b) / (1 + row_norms), initial=0.0)) * math.sqrt(n_total))
    eta = max(10.0, math.sqrt(n_total), float(np.max(row_norms, initial=0.0)), c_norm)
    X, S = [], []
    for blk in prog.blocks:
        if blk.kind == PSD:
            X.append(xi * np.eye(blk.size, dtype=blk.dtype))
            S.append(eta * np.eye(blk.size, dtype=blk.dtype))
        else:
            X.append(xi * np.ones(blk.size))
            S.append(eta * np.ones(blk.size))
    return X, np.zeros(prog.m), S


def _hkm_dx(blk, Xk, Sinv_k, V):
    """Hermitian part of X V S^-1 (elementwise product for nonneg blocks)."""
    if blk.kind == NONNEG:
        return Xk * V * Sinv_k
    return _herm(Xk @ V @ Sinv_k)


def solve_conic(prog: ConicProgram, opts: SolverOptions | None = None) -> ConicResult:
    opts = opts or SolverOptions()
    blocks = prog.blocks
    n_total = sum(b.size for b in blocks)
    X, y, S = _start(prog)
    b = prog.b
    norm_b = 1.0 + np.linalg.norm(b)
    norm_c = 1.0 + math.sqrt(sum(np.sum(np.abs(ck) ** 2) for ck in prog.c))
    history = []
    status = "max_iter"
    stalls = 0
    it = 0
    pobj = dobj = float("nan")
    pinf = dinf = float("inf")
    # best iterate by the worst of the three residuals; returned when the
    # iteration stops making progress near the optimum
    best = None
    best_merit = math.inf
    last_gain = 0

    for it in range(1, opts.max_iter + 1):
        AX = prog.apply(X)
        Aty = prog.adjoint(y)
        Rp = b - AX
        Rd = [ck - Ay + Sk for ck, Ay, Sk in zip(prog.c, Aty, S)]
        pobj = prog.objective(X)
        dobj = float(b @ y)
        mu = sum(_inner(Xk, Sk) for Xk, Sk in zip(X, S)) / n_total
        pinf = float(np.linalg.norm(Rp)) / norm_b
        dinf = math.sqrt(sum(np.sum(np.abs(r) ** 2) for r in Rd)) / norm_c
        relgap = abs(dobj - pobj) / (1.0 + abs(pobj) + abs(dobj))
        history.append((it, pobj, dobj, relgap, pinf, dinf))
        if opts.trace is not None:
            print(f"{it:4d} pobj={pobj:+.12e} dobj={dobj:+.12e} gap={relgap:.2e} "
                  f"pinf={pinf:.2e} dinf={dinf:.2e} mu={mu:.2e}", file=opts.trace)

        if pinf <= opts.feas_tol and dinf <= opts.feas_tol and relgap <= opts.gap_tol:
            status = "optimal"
            break
        merit = max(pinf, dinf, relgap)
        if merit < 0.5 * best_merit:
            last_gain = it
        if merit < best_merit:
            best_merit = merit
            best = (X, y, S, pobj, dobj, pinf, dinf)
        if it - last_gain >= STALL_WINDOW and best_merit <= STALL_MERIT:
            status = "stalled"
            break
        big = 1e10 * (norm_b + norm_c)
        if dobj < -big and dinf <= 1e-6:
            status = "infeasible"
            break
        if pobj > big and pinf <= 1e-6:
            status = "unbounded"
            break

        Sinv = [_inverse(blk, Sk) for blk, Sk in zip(blocks, S)]
        M = _schur(prog, X, Sinv)
        factor = _factor(M)

        def direction(sigma, corr):
            # dX = sigma mu S^-1 - X + H(X Rd S^-1) - H(X A*dy S^-1) - corr
            base = []
            for k, blk in enumerate(blocks):
                v = sigma * mu * Sinv[k] - X[k] + _hkm_dx(blk, X[k], Sinv[k], Rd[k])
                if corr is not None:
                    v = v - corr[k]
                base.append(v)
            rhs = prog.apply(base) - Rp
            dy = _solve(factor, M, rhs)
            Atdy = prog.adjoint(dy)
            dX = [bk - _hkm_dx(blk, X[k], Sinv[k], Atdy[k]) for k, (blk, bk) in enumerate(zip(blocks, base))]
            dS = [Ad - r for Ad, r in zip(Atdy, Rd)]
            return dX, dy, dS

        def steps(dX, dS):
            ap = min(1.0, min(_max_step(blk, Xk, d) for blk, Xk, d in zip(blocks, X, dX)))
            ad = min(1.0, min(_max_step(blk, Sk, d) for blk, Sk, d in zip(blocks, S, dS)))
            return ap, ad

        dXa, dya, dSa = direction(0.0, None)
        ap, ad = steps(dXa, dSa)
        mu_aff = sum(_inner(Xk + ap * dx, Sk + ad * ds) for Xk, Sk, dx, ds in zip(X, S, dXa, dSa)) / n_total
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        corr = [_hkm_dx(blk, dXa[k], Sinv[k], dSa[k]) if blk.kind == NONNEG
                else _herm(dXa[k] @ dSa[k] @ Sinv[k]) for k, blk in enumerate(blocks)]
        dX, dy, dS = direction(sigma, corr)
        ap, ad = steps(dX, dS)
        ap = min(1.0, opts.step_fraction * ap)
        ad = min(1.0, opts.step_fraction * ad)
        if not (np.isfinite(ap) and np.isfinite(ad)):
            status = "numerical_failure"
            break
        if max(ap, ad) < 1e-10:
            stalls += 1
            if stalls >= 3:
                status = "numerical_failure"
                break
        else:
            stalls = 0
        X = [Xk + ap * d for Xk, d in zip(X, dX)]
        X = [_herm(Xk) if blk.kind == PSD else Xk for blk, Xk in zip(blocks, X)]
        S = [Sk + ad * d for Sk, d in zip(S, dS)]
        S = [_herm(Sk) if blk.kind == PSD else Sk for blk, Sk in zip(blocks, S)]
        y = y + ad * dy

    if status in ("stalled", "max_iter", "numerical_failure") and best is not None:
        X, y, S, pobj, dobj, pinf, dinf = best
    return ConicResult(status, X, y, S, pobj, dobj, it, pinf, dinf, history)


def dual_slack(prog: ConicProgram, y: np.ndarray) -> list[np.ndarray]:
    """Recompute S = A*y - C from the multipliers alone."""
    return [Ay - ck for Ay, ck in zip(prog.adjoint(y), prog.c)]


def min_eig(blk: ConeBlock, S: np.ndarray) -> float:
    if blk.kind == NONNEG:
        return float(np.min(S, initial=math.inf))
    return float(np.linalg.eigvalsh(_herm(S))[0])

