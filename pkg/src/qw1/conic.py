"""Dense primal-dual interior-point solver for small SDP/LP problems.

Standard form:

    minimize    c . x
    subject to  A x = b
                x in K = S+(k_1) x ... x S+(k_B) x R+^m

PSD blocks are stored in svec coordinates (upper triangle, row-major,
off-diagonal entries scaled by sqrt(2) so the Euclidean inner product of
two svecs equals the trace inner product of the matrices); the
nonnegative-orthant segment sits after all PSD blocks.

Algorithm: infeasible-start path following with Nesterov-Todd scaling and
a Mehrotra predictor-corrector step, the textbook recipe:

  * NT scaling point per block from the SVD of L_s^T L_x, where
    X = L_x L_x^T and S = L_s L_s^T;
  * Schur complement  A (W (.) W) A^T  assembled densely per block with a
    static 1e-12 diagonal regularization (escalating jitter on Cholesky
    breakdown);
  * predictor with sigma = 0, corrector with sigma = (mu_aff/mu)^3 and the
    second-order Mehrotra term;
  * steps damped to 0.98 of the distance to the cone boundary.

Equality constraints that are linearly dependent are dropped up front by a
rank-revealing QR of A^T (pivot threshold 1e-10); the multipliers of
dropped rows are reported as 0.  Everything is deterministic: same problem
and options give the same iterates.

Complex Hermitian data enters through embed_hermitian, which doubles
traces and inner products; callers compensate the factor 2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, InvalidInput

PRESOLVE_PIVOT_TOL = 1e-10
STATIC_REGULARIZATION = 1e-12


class SolverStatus(enum.Enum):
    Optimal = "Optimal"
    MaxIterations = "MaxIterations"
    NumericalFailure = "NumericalFailure"


@dataclass
class SolverOptions:
    max_iterations: int = 200
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    verbose: bool = False
    step_fraction: float = 0.98


@dataclass(frozen=True)
class ConicProblem:
    """min c.x s.t. Ax = b, x in (PSD blocks, nonnegative tail)."""

    psd_blocks: tuple
    lp_dim: int
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "psd_blocks", tuple(int(k) for k in self.psd_blocks))
        object.__setattr__(self, "A", np.ascontiguousarray(self.A, dtype=float))
        object.__setattr__(self, "b", np.ascontiguousarray(self.b, dtype=float))
        object.__setattr__(self, "c", np.ascontiguousarray(self.c, dtype=float))
        if any(k < 1 for k in self.psd_blocks) or self.lp_dim < 0:
            raise InvalidInput("block sizes must be positive, lp_dim nonnegative")
        n = self.num_vars
        if self.A.ndim != 2 or self.A.shape[1] != n:
            raise DimensionMismatch(f"A has shape {self.A.shape}, expected (*, {n})")
        if self.b.shape != (self.A.shape[0],):
            raise DimensionMismatch("b length does not match A rows")
        if self.c.shape != (n,):
            raise DimensionMismatch("c length does not match variable count")

    @property
    def num_vars(self) -> int:
        return sum(svec_len(k) for k in self.psd_blocks) + self.lp_dim


@dataclass
class ConicSolution:
    status: SolverStatus
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status is SolverStatus.Optimal


# ---------------------------------------------------------------------------
# svec / smat and the real embedding of Hermitian matrices
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)
_svec_cache: dict = {}


def svec_len(k: int) -> int:
    return k * (k + 1) // 2


def _triu(k: int):
    try:
        return _svec_cache[k]
    except KeyError:
        rows, cols = np.triu_indices(k)
        scale = np.where(rows == cols, 1.0, _SQRT2)
        _svec_cache[k] = (rows, cols, scale)
        return _svec_cache[k]


def svec(m: np.ndarray) -> np.ndarray:
    """Upper triangle of a symmetric matrix, off-diagonals scaled by sqrt(2)."""
    k = m.shape[-1]
    rows, cols, scale = _triu(k)
    return m[..., rows, cols] * scale


def smat(v: np.ndarray, k: int) -> np.ndarray:
    """Inverse of svec; accepts a batch in the leading dimensions."""
    rows, cols, scale = _triu(k)
    out = np.zeros(v.shape[:-1] + (k, k), dtype=float)
    half = v / scale
    out[..., rows, cols] = half
    out[..., cols, rows] = half
    return out


def embed_hermitian(h) -> np.ndarray:
    """Real symmetric image [[A, -B], [B, A]] of H = A + iB.

    Eigenvalues are duplicated and every trace/inner product is exactly
    doubled; PSD-ness is preserved in both directions.
    """
    m = np.asarray(getattr(h, "matrix", h), dtype=complex)
    a, b = m.real, m.imag
    return np.block([[a, -b], [b, a]])


def extract_hermitian(m: np.ndarray) -> np.ndarray:
    """Adjoint-average back from the real embedding; PSD-preserving."""
    k = m.shape[0]
    if k % 2:
        raise DimensionMismatch("embedded matrix must have even dimension")
    d = k // 2
    a = (m[:d, :d] + m[d:, d:]) / 2.0
    b = (m[d:, :d] - m[:d, d:]) / 2.0
    return a + 1j * b


# ---------------------------------------------------------------------------
# solver internals
# ---------------------------------------------------------------------------

class _Cone:
    """Index arithmetic for the concatenated (PSD blocks, LP tail) layout."""

    def __init__(self, psd_blocks: Sequence[int], lp_dim: int):
        self.blocks = list(psd_blocks)
        self.lp_dim = lp_dim
        self.slices = []
        off = 0
        for k in self.blocks:
            self.slices.append(slice(off, off + svec_len(k)))
            off += svec_len(k)
        self.lp_slice = slice(off, off + lp_dim)
        self.dim = off + lp_dim
        self.nu = sum(self.blocks) + lp_dim  # barrier parameter

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        for k, sl in zip(self.blocks, self.slices):
            e[sl] = svec(np.eye(k))
        e[self.lp_slice] = 1.0
        return e


def _interior_matrix(m: np.ndarray, floor: float) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.T) / 2.0)
    w = np.maximum(w, floor)
    return (v * w) @ v.T


def _push_interior(cone: _Cone, v: np.ndarray, floor: float = 1e-3) -> np.ndarray:
    out = np.empty(cone.dim)
    for k, sl in zip(cone.blocks, cone.slices):
        out[sl] = svec(_interior_matrix(smat(v[sl], k), floor))
    out[cone.lp_slice] = np.maximum(v[cone.lp_slice], floor)
    return out


class _Scaling:
    """NT scaling data for one iterate."""

    def __init__(self, cone: _Cone, x: np.ndarray, s: np.ndarray):
        self.cone = cone
        self.R = []
        self.Rinv = []
        self.lam = []
        for k, sl in zip(cone.blocks, cone.slices):
            X = smat(x[sl], k)
            S = smat(s[sl], k)
            lx = _chol_like(X)
            ls = _chol_like(S)
            u, sig, vt = np.linalg.svd(ls.T @ lx)
            sig = np.maximum(sig, 1e-150)
            isqrt = 1.0 / np.sqrt(sig)
            self.R.append(lx @ vt.T * isqrt)
            self.Rinv.append((isqrt[:, None] * u.T) @ ls.T)
            self.lam.append(sig)
        xl = x[cone.lp_slice]
        sl_ = s[cone.lp_slice]
        self.w_lp = np.sqrt(xl / sl_)
        self.lam_lp = np.sqrt(xl * sl_)
        self.W = [r @ r.T for r in self.R]

    def apply_G(self, v: np.ndarray) -> np.ndarray:
        """v -> svec(W smat(v) W) per block, w^2 * v on the LP tail."""
        cone = self.cone
        out = np.empty(cone.dim)
        for W, k, sl in zip(self.W, cone.blocks, cone.slices):
            out[sl] = svec(W @ smat(v[sl], k) @ W)
        out[cone.lp_slice] = self.w_lp ** 2 * v[cone.lp_slice]
        return out

    def max_step(self, v: np.ndarray, dv: np.ndarray, scaled_by_R: bool) -> float:
        """Largest alpha with v + alpha dv still in the cone.

        PSD blocks are checked in the scaled frame where the current point is
        diag(lam): scaled_by_R=True means dv is a primal direction (scale by
        R^{-1} . R^{-T}), False a dual one (R^T . R).
        """
        cone = self.cone
        alpha = np.inf
        for i, (k, sl) in enumerate(zip(cone.blocks, cone.slices)):
            dM = smat(dv[sl], k)
            if scaled_by_R:
                dhat = self.Rinv[i] @ dM @ self.Rinv[i].T
            else:
                dhat = self.R[i].T @ dM @ self.R[i]
            lam = self.lam[i]
            scaled = dhat / np.sqrt(np.outer(lam, lam))
            wmin = np.linalg.eigvalsh((scaled + scaled.T) / 2.0).min()
            if wmin < 0:
                alpha = min(alpha, -1.0 / wmin)
        lp = v[cone.lp_slice]
        dlp = dv[cone.lp_slice]
        neg = dlp < 0
        if np.any(neg):
            alpha = min(alpha, float((-lp[neg] / dlp[neg]).min()))
        return alpha


def _chol_like(m: np.ndarray) -> np.ndarray:
    # eigenvalue route instead of Cholesky: survives semidefinite iterates
    w, v = np.linalg.eigh(m)
    w = np.maximum(w, 1e-300)
    return v * np.sqrt(w)


def _presolve(A: np.ndarray, b: np.ndarray):
    """Keep a maximal independent row set via QR with column pivoting on A^T."""
    m = A.shape[0]
    if m == 0:
        return A, b, np.array([], dtype=int)
    r = scipy.linalg.qr(A.T, mode="r", pivoting=True)
    diag = np.abs(np.diag(r[0]))
    piv = r[1]
    if diag.size == 0 or diag[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(diag > PRESOLVE_PIVOT_TOL * diag[0]))
    keep = np.sort(piv[:rank])
    return A[keep], b[keep], keep


class _BlockData:
    """Per-block constraint data used to assemble the Schur complement fast."""

    def __init__(self, A: np.ndarray, cone: _Cone):
        self.entries = []
        for k, sl in zip(cone.blocks, cone.slices):
            sub = A[:, sl]
            touch = np.flatnonzero(np.any(sub != 0.0, axis=1))
            mats = smat(sub[touch], k) if touch.size else np.zeros((0, k, k))
            self.entries.append((touch, sub[touch], mats, k))
        self.lp_cols = A[:, cone.lp_slice]


def _schur(bd: _BlockData, scal: _Scaling, m: int) -> np.ndarray:
    M = np.zeros((m, m))
    for (touch, sub, mats, k), W in zip(bd.entries, scal.W):
        if touch.size == 0:
            continue
        T = W @ mats @ W
        M[np.ix_(touch, touch)] += sub @ svec(T).T
    if bd.lp_cols.shape[1]:
        M += (bd.lp_cols * scal.w_lp ** 2) @ bd.lp_cols.T
    return (M + M.T) / 2.0


def solve(problem: ConicProblem, options: SolverOptions | None = None,
          x0: np.ndarray | None = None, y0: np.ndarray | None = None) -> ConicSolution:
    """Run the interior-point method; never raises on numerical trouble,
    reports it through the status field instead."""
    opts = options or SolverOptions()
    cone = _Cone(problem.psd_blocks, problem.lp_dim)
    A_full, b_full, c = problem.A, problem.b, problem.c
    A, b, keep = _presolve(A_full, b_full)
    m = A.shape[0]
    bd = _BlockData(A, cone)

    e = cone.identity()
    x = _push_interior(cone, x0) if x0 is not None else e.copy()
    if y0 is not None:
        y_hint = np.asarray(y0, dtype=float)
        s = _push_interior(cone, c - A_full.T @ y_hint)
        y = y_hint[keep]
    else:
        s = e.copy()
        y = np.zeros(m)

    bnorm = 1.0 + (np.abs(b_full).max() if b_full.size else 0.0)
    cnorm = 1.0 + (np.abs(c).max() if c.size else 0.0)
    status = SolverStatus.MaxIterations
    it = 0

    for it in range(1, opts.max_iterations + 1):
        rp = b - A @ x
        rd = c - A.T @ y - s
        mu = float(x @ s) / cone.nu
        pobj = float(c @ x)
        dobj = float(b @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pres = (np.abs(rp).max() if rp.size else 0.0) / bnorm
        dres = np.abs(rd).max() / cnorm
        if opts.verbose:
            print(f"iter {it:3d}  mu {mu:9.2e}  gap {gap:9.2e}  "
                  f"pres {pres:9.2e}  dres {dres:9.2e}")
        if gap <= opts.gap_tol and pres <= opts.feas_tol and dres <= opts.feas_tol:
            status = SolverStatus.Optimal
            break
        if not (np.isfinite(mu) and np.isfinite(pobj) and np.isfinite(dobj)):
            status = SolverStatus.NumericalFailure
            break

        scal = _Scaling(cone, x, s)
        M = _schur(bd, scal, m)
        chol = None
        reg = STATIC_REGULARIZATION
        while chol is None:
            try:
                chol = scipy.linalg.cho_factor(
                    M + reg * np.eye(m), lower=True, check_finite=False)
            except np.linalg.LinAlgError:
                reg *= 100.0
                if reg > 1e-4:
                    break
        if chol is None:
            status = SolverStatus.NumericalFailure
            break

        def newton(rc):
            rhs = rp - A @ (rc - scal.apply_G(rd))
            dy = scipy.linalg.cho_solve(chol, rhs, check_finite=False)
            ds = rd - A.T @ dy
            dx = rc - scal.apply_G(ds)
            return dx, dy, ds

        # predictor: aim straight at the boundary
        dxa, dya, dsa = newton(-x)
        ap = min(1.0, scal.max_step(x, dxa, True))
        ad = min(1.0, scal.max_step(s, dsa, False))
        mu_aff = float((x + ap * dxa) @ (s + ad * dsa)) / cone.nu
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0

        # corrector with the Mehrotra second-order term, built in the scaled
        # frame where both x and s sit at diag(lam)
        rc = np.empty(cone.dim)
        for i, (k, sl) in enumerate(zip(cone.blocks, cone.slices)):
            lam = scal.lam[i]
            dxh = scal.Rinv[i] @ smat(dxa[sl], k) @ scal.Rinv[i].T
            dsh = scal.R[i].T @ smat(dsa[sl], k) @ scal.R[i]
            dmat = sigma * mu * np.eye(k) - np.diag(lam ** 2) \
                - (dxh @ dsh + dsh @ dxh) / 2.0
            D = 2.0 * dmat / np.add.outer(lam, lam)
            rc[sl] = svec(scal.R[i] @ ((D + D.T) / 2.0) @ scal.R[i].T)
        lam_lp = scal.lam_lp
        if cone.lp_dim:
            dxh = dxa[cone.lp_slice] / scal.w_lp
            dsh = dsa[cone.lp_slice] * scal.w_lp
            d_lp = sigma * mu - lam_lp ** 2 - dxh * dsh
            rc[cone.lp_slice] = scal.w_lp * d_lp / lam_lp

        dx, dy, ds = newton(rc)
        ap = min(1.0, opts.step_fraction * scal.max_step(x, dx, True))
        ad = min(1.0, opts.step_fraction * scal.max_step(s, ds, False))
        if not (np.isfinite(ap) and np.isfinite(ad)) or max(ap, ad) <= 0.0:
            status = SolverStatus.NumericalFailure
            break
        x = x + ap * dx
        y = y + ad * dy
        s = s + ad * ds

    y_full = np.zeros(A_full.shape[0])
    if keep.size:
        y_full[keep] = y
    rp_full = b_full - A_full @ x
    rd_full = c - A_full.T @ y_full - s
    pobj = float(c @ x)
    dobj = float(b_full @ y_full)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    pres = (np.abs(rp_full).max() if rp_full.size else 0.0) / bnorm
    dres = np.abs(rd_full).max() / cnorm
    if status is SolverStatus.Optimal and (pres > 10 * opts.feas_tol
                                           or dres > 10 * opts.feas_tol):
        # dropped rows were inconsistent with the kept ones
        status = SolverStatus.NumericalFailure
    return ConicSolution(
        status=status, x=x, y=y_full, s=s,
        primal_objective=pobj, dual_objective=dobj, gap=gap,
        primal_residual=float(pres), dual_residual=float(dres),
        iterations=it,
    )
