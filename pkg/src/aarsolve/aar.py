"""Alternating Anderson-Richardson iteration with optional debug instrumentation.

The solver performs relaxed Richardson sweeps and replaces every p-th update
with an Anderson extrapolation over a sliding window of iterate and residual
differences.  Convergence is tested only at extrapolation steps, using the
unpreconditioned relative residual that is already available there, so the
number of residual-norm evaluations per solve is ceil(iterations / p) plus a
final check at termination.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .precond import Identity
from .report import AndersonStepRecord, SolveReport, SolveStatus
from .sparse import SparseMatrix, norm2

__all__ = [
    "AarOptions",
    "AndersonHistory",
    "aar_solve",
    "anderson_gamma",
    "pseudoinverse",
    "richardson_solve",
]

# Test hook: when True, every solve in the process runs with the Anderson
# projection checks enabled, regardless of the debug argument.
_FORCE_DEBUG = False


@dataclass
class AarOptions:
    """Knobs of the alternating Anderson-Richardson iteration."""

    omega: float = 0.6
    beta: float = 0.6
    m: int = 9
    p: int = 8
    tol: float = 1e-6
    max_iter: int = 100_000
    rcond: float = 1e-14

    def validate(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be nonnegative, got {self.max_iter}")
        if not (0 < self.rcond < 1):
            raise ValueError(f"rcond must be in (0, 1), got {self.rcond}")


class AndersonHistory:
    """Sliding window of iterate and residual differences.

    Difference columns live in fixed cyclic slots of two Fortran-ordered
    buffers; the residual buffer carries one spare column so the Gram matrix
    and its right-hand side can be formed by a single fused product
    [F | f]^H [F | f].  Column order within the window is immaterial: it only
    permutes the extrapolation coefficients, not the extrapolated point.
    """

    def __init__(self, n: int, m: int, dtype):
        self.m = m
        self.count = 0
        self._next = 0
        self._dx = np.zeros((n, m), dtype=dtype, order="F")
        self._df = np.zeros((n, m + 1), dtype=dtype, order="F")
        self.prev_x: np.ndarray | None = None
        self.prev_f: np.ndarray | None = None

    def observe(self, x: np.ndarray, f: np.ndarray) -> None:
        """Record the differences against the previous (x, f) pair, then keep x, f."""
        if self.prev_x is not None:
            slot = self._next
            np.subtract(x, self.prev_x, out=self._dx[:, slot])
            np.subtract(f, self.prev_f, out=self._df[:, slot])
            self._next = (self._next + 1) % self.m
            if self.count < self.m:
                self.count += 1
        self.prev_x = x
        self.prev_f = f

    def gram_with(self, f: np.ndarray) -> np.ndarray:
        """Fused product [F | f]^H [F | f]; the trailing row/column carry F^H f and |f|^2."""
        c = self.count
        self._df[:, c] = f
        ext = self._df[:, : c + 1]
        ext_h = ext.T if ext.dtype.kind == "f" else ext.conj().T
        return ext_h @ ext

    def columns(self) -> tuple[np.ndarray, np.ndarray]:
        """Views of the active X and F difference columns."""
        c = self.count
        return self._dx[:, :c], self._df[:, :c]


def _pinv_hermitian(G: np.ndarray, rcond: float) -> tuple[np.ndarray, np.ndarray]:
    """Moore-Penrose pseudoinverse of a hermitian matrix via eigendecomposition.

    Eigenvalues with magnitude at most rcond times the largest magnitude are
    truncated to zero.  Returns the pseudoinverse and the eigenvalues.
    """
    w, V = np.linalg.eigh(G)
    if w.size == 0:
        return G.copy(), w
    amax = float(np.max(np.abs(w)))
    if amax == 0.0:
        return np.zeros_like(G), w
    keep = np.abs(w) > rcond * amax
    inv = np.zeros_like(w)
    np.divide(1.0, w, out=inv, where=keep)
    return (V * inv) @ (V.T if V.dtype.kind == "f" else V.conj().T), w


def pseudoinverse(G, rcond: float = 1e-14) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a small dense hermitian matrix."""
    G = np.asarray(G)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError("pseudoinverse expects a square matrix")
    return _pinv_hermitian(G, rcond)[0]


def _gamma_from_fused(T: np.ndarray, rcond: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Extrapolation coefficients from the fused product [F | f]^H [F | f].

    Returns (gamma, Gram eigenvalues, |f|^2).
    """
    c = T.shape[0] - 1
    G = T[:c, :c]
    g = T[:c, c]
    Pinv, w = _pinv_hermitian(G, rcond)
    gamma = Pinv @ g
    # One step of iterative refinement keeps the normal-equation residual at
    # roundoff scale even when the Gram matrix is poorly conditioned.
    gamma = gamma + Pinv @ (g - G @ gamma)
    return gamma, w, float(T[c, c].real)


def anderson_gamma(df_columns, f, rcond: float = 1e-14) -> np.ndarray:
    """Least-squares coefficients gamma = pinv(F^H F) (F^H f) for the history columns.

    The Gram matrix and right-hand side are assembled in one fused product
    over [F | f], mirroring a single global reduction.
    """
    df_columns = list(df_columns)
    if not df_columns:
        raise ValueError("anderson_gamma requires at least one history column")
    f = np.asarray(f)
    ext = np.column_stack(df_columns + [f])
    ext_h = ext.T if ext.dtype.kind == "f" else ext.conj().T
    gamma, _, _ = _gamma_from_fused(ext_h @ ext, rcond)
    return gamma


def _check_projection(record: AndersonStepRecord, rcond: float) -> None:
    """Debug-mode invariants of one Anderson step.

    The minimized residual can never exceed |f| (gamma = 0 is feasible), and
    whenever the Gram matrix is well conditioned relative to the truncation
    threshold the normal equations must be solved accurately.
    """
    slack = 1e-10 * record.f_norm + 1e-300
    if not record.minimized_norm <= record.f_norm + slack:
        raise AssertionError(
            f"anderson projection increased the residual at iteration "
            f"{record.iteration}: |f - F gamma| = {record.minimized_norm:.17e} "
            f"> |f| = {record.f_norm:.17e}"
        )
    if record.gram_eig_min > 0 and record.gram_eig_max / record.gram_eig_min <= 1.0 / rcond:
        bound = 1e-8 * math.sqrt(record.gram_eig_max) * record.f_norm
        if record.normal_eq_residual > bound + 1e-300:
            raise AssertionError(
                f"anderson normal equations inaccurate at iteration "
                f"{record.iteration}: |F^H (f - F gamma)| = "
                f"{record.normal_eq_residual:.17e} > {bound:.17e}"
            )


def _prepare_system(A: SparseMatrix, b, x0):
    """Common validation and dtype promotion for all solvers."""
    if A.nrows != A.ncols:
        raise ValueError(f"solver requires a square matrix, got {A.nrows}x{A.ncols}")
    n = A.nrows
    b = np.asarray(b)
    if b.shape != (n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n},)")
    complex_work = A.is_complex or np.iscomplexobj(b) or (x0 is not None and np.iscomplexobj(x0))
    dtype = np.complex128 if complex_work else np.float64
    b = np.ascontiguousarray(b, dtype=dtype)
    if x0 is None:
        x = np.zeros(n, dtype=dtype)
    else:
        x0 = np.asarray(x0)
        if x0.shape != (n,):
            raise ValueError(f"initial guess has shape {x0.shape}, expected ({n},)")
        x = np.array(x0, dtype=dtype, copy=True)
    return n, dtype, b, x


def _zero_rhs_report(n: int, dtype) -> SolveReport:
    return SolveReport(
        x=np.zeros(n, dtype=dtype),
        residual_trace=[(0, 0.0)],
        iterations=0,
        extrapolations=0,
        status=SolveStatus.CONVERGED,
        residual_norm_evals=1,
    )


def _breakdown_iterate(x, best_x, x0_fallback):
    """Last finite iterate available when a solve diverges."""
    if bool(np.all(np.isfinite(x))):
        return x
    if best_x is not None:
        return best_x
    return x0_fallback


def aar_solve(
    A: SparseMatrix,
    b,
    x0=None,
    P=None,
    opts: AarOptions | None = None,
    *,
    debug: bool = False,
    deadline: float | None = None,
) -> SolveReport:
    """Solve A x = b by preconditioned alternating Anderson-Richardson iteration.

    Every iteration computes f = M^{-1}(b - A x).  When the iteration count
    is not a multiple of p the update is the Richardson sweep x + omega f;
    at multiples of p the convergence of the current iterate is tested first
    and, failing that, the Anderson update x + beta f - (X + beta F) gamma is
    taken, with gamma the pseudoinverse solution of the window's normal
    equations.  debug=True records per-extrapolation diagnostics and enforces
    the projection invariants.  deadline is an optional time.monotonic() value
    after which the solve stops with MAX_ITER status.
    """
    opts = AarOptions() if opts is None else opts
    opts.validate()
    P = Identity() if P is None else P
    n, dtype, b, x = _prepare_system(A, b, x0)
    bnorm = norm2(b)
    if bnorm == 0.0:
        return _zero_rhs_report(n, dtype)
    x0_fallback = x.copy()
    debug_on = debug or _FORCE_DEBUG
    records: list[AndersonStepRecord] | None = [] if debug_on else None
    history = AndersonHistory(n, opts.m, dtype)
    trace: list[tuple[int, float]] = []
    evals = 0
    extrapolations = 0
    best_rel = math.inf
    best_x = None
    status = None
    reason = None
    iterations = 0
    # Iterate arrays are rebound, never mutated in place, so the history and
    # the best-iterate bookkeeping can hold references instead of copies.
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        for k in range(opts.max_iter):
            r = b - A.matvec(x)
            f = P.apply(r)
            history.observe(x, f)
            if (k + 1) % opts.p == 0:
                rel = norm2(r) / bnorm
                evals += 1
                trace.append((k, rel))
                if not (np.isfinite(rel) and bool(np.all(np.isfinite(f)))):
                    status = SolveStatus.BREAKDOWN
                    reason = "divergence"
                    x = _breakdown_iterate(x, best_x, x0_fallback)
                    iterations = k
                    break
                if rel < best_rel:
                    best_rel = rel
                    best_x = x
                if rel <= opts.tol:
                    status = SolveStatus.CONVERGED
                    iterations = k
                    break
                if deadline is not None and time.monotonic() >= deadline:
                    status = SolveStatus.MAX_ITER
                    x = best_x if best_x is not None else x
                    iterations = k
                    break
                c = history.count
                if c == 0:
                    x = x + opts.beta * f
                else:
                    T = history.gram_with(f)
                    gamma, eigvals, fnorm_sq = _gamma_from_fused(T, opts.rcond)
                    Xc, Fc = history.columns()
                    u = x - Xc @ gamma
                    v = f - Fc @ gamma
                    if debug_on:
                        Fc_h = Fc.T if Fc.dtype.kind == "f" else Fc.conj().T
                        record = AndersonStepRecord(
                            iteration=k,
                            ncols=c,
                            f_norm=math.sqrt(max(fnorm_sq, 0.0)),
                            minimized_norm=norm2(v),
                            normal_eq_residual=norm2(Fc_h @ v),
                            gram_eig_max=float(eigvals[-1]),
                            gram_eig_min=float(eigvals[0]),
                        )
                        records.append(record)
                        _check_projection(record, opts.rcond)
                    x = u + opts.beta * v
                extrapolations += 1
            else:
                x = x + opts.omega * f
        else:
            # Iteration budget exhausted: one final check at termination.
            r = b - A.matvec(x)
            rel = norm2(r) / bnorm
            evals += 1
            trace.append((opts.max_iter, rel))
            iterations = opts.max_iter
            if not np.isfinite(rel):
                status = SolveStatus.BREAKDOWN
                reason = "divergence"
                x = _breakdown_iterate(x, best_x, x0_fallback)
            elif rel <= opts.tol:
                status = SolveStatus.CONVERGED
            else:
                status = SolveStatus.MAX_ITER
                if best_x is not None and best_rel < rel:
                    x = best_x
    return SolveReport(
        x=x,
        residual_trace=trace,
        iterations=iterations,
        extrapolations=extrapolations,
        status=status,
        breakdown_reason=reason,
        residual_norm_evals=evals,
        anderson_debug=records,
    )


def richardson_solve(
    A: SparseMatrix,
    b,
    x0=None,
    P=None,
    omega: float = 0.6,
    tol: float = 1e-6,
    max_iter: int = 100_000,
    check_every: int = 1,
    *,
    deadline: float | None = None,
) -> SolveReport:
    """Preconditioned Richardson iteration x <- x + omega M^{-1}(b - A x).

    Standalone reference for the limit of the alternating method as the
    extrapolation period grows beyond the iteration budget; the update
    arithmetic matches aar_solve exactly so that limit is reproduced bitwise.
    Convergence is checked every check_every iterations and at termination.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if check_every < 1:
        raise ValueError(f"check_every must be >= 1, got {check_every}")
    if max_iter < 0:
        raise ValueError(f"max_iter must be nonnegative, got {max_iter}")
    P = Identity() if P is None else P
    n, dtype, b, x = _prepare_system(A, b, x0)
    bnorm = norm2(b)
    if bnorm == 0.0:
        return _zero_rhs_report(n, dtype)
    x0_fallback = x.copy()
    trace: list[tuple[int, float]] = []
    evals = 0
    best_rel = math.inf
    best_x = None
    status = None
    reason = None
    iterations = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        for k in range(max_iter):
            r = b - A.matvec(x)
            f = P.apply(r)
            if (k + 1) % check_every == 0:
                rel = norm2(r) / bnorm
                evals += 1
                trace.append((k, rel))
                if not (np.isfinite(rel) and bool(np.all(np.isfinite(f)))):
                    status = SolveStatus.BREAKDOWN
                    reason = "divergence"
                    x = _breakdown_iterate(x, best_x, x0_fallback)
                    iterations = k
                    break
                if rel < best_rel:
                    best_rel = rel
                    best_x = x
                if rel <= tol:
                    status = SolveStatus.CONVERGED
                    iterations = k
                    break
                if deadline is not None and time.monotonic() >= deadline:
                    status = SolveStatus.MAX_ITER
                    x = best_x if best_x is not None else x
                    iterations = k
                    break
            x = x + omega * f
        else:
            r = b - A.matvec(x)
            rel = norm2(r) / bnorm
            evals += 1
            trace.append((max_iter, rel))
            iterations = max_iter
            if not np.isfinite(rel):
                status = SolveStatus.BREAKDOWN
                reason = "divergence"
                x = _breakdown_iterate(x, best_x, x0_fallback)
            elif rel <= tol:
                status = SolveStatus.CONVERGED
            else:
                status = SolveStatus.MAX_ITER
                if best_x is not None and best_rel < rel:
                    x = best_x
    return SolveReport(
        x=x,
        residual_trace=trace,
        iterations=iterations,
        extrapolations=0,
        status=status,
        breakdown_reason=reason,
        residual_norm_evals=evals,
    )
