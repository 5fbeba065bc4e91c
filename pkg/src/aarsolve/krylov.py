"""Left-preconditioned Krylov baselines: restarted GMRES, Bi-CGSTAB, and CG.

All three declare convergence on the unpreconditioned relative residual
|b - A x| / |b| <= tol so their iteration counts are comparable with the
alternating Anderson-Richardson solver.  Monitored recurrence residuals are
verified against the true residual before convergence is reported.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .aar import _breakdown_iterate, _prepare_system, _zero_rhs_report
from .precond import Identity
from .report import SolveReport, SolveStatus
from .sparse import SparseMatrix, norm2

__all__ = [
    "KrylovOptions",
    "bicgstab_solve",
    "cg_solve",
    "gmres_solve",
]

_BREAKDOWN_EPS = 1e-30


@dataclass
class KrylovOptions:
    """Shared knobs for the Krylov baselines; restart applies to GMRES only."""

    tol: float = 1e-6
    max_iter: int = 100_000
    restart: int = 30

    def validate(self) -> None:
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be nonnegative, got {self.max_iter}")
        if self.restart < 1:
            raise ValueError(f"restart must be >= 1, got {self.restart}")


def _givens(a, b):
    """Unitary 2x2 rotation [[g11, g12], [-conj(g12), conj(g11)]] sending (a, b) to (t, 0)."""
    t = math.hypot(abs(a), abs(b))
    if t == 0.0:
        return 1.0, 0.0, 0.0
    return np.conj(a) / t, np.conj(b) / t, t


def gmres_solve(
    A: SparseMatrix,
    b,
    x0=None,
    P=None,
    opts: KrylovOptions | None = None,
    *,
    deadline: float | None = None,
) -> SolveReport:
    """Restarted GMRES on the left-preconditioned system M^{-1} A x = M^{-1} b.

    Arnoldi with modified Gram-Schmidt and Givens rotations; the in-cycle
    estimate tracks the preconditioned residual, and the true unpreconditioned
    residual is recomputed from x at every cycle boundary and at termination.
    """
    opts = KrylovOptions() if opts is None else opts
    opts.validate()
    P = Identity() if P is None else P
    n, dtype, b, x = _prepare_system(A, b, x0)
    bnorm = norm2(b)
    if bnorm == 0.0:
        return _zero_rhs_report(n, dtype)
    x0_fallback = x.copy()
    pb = P.apply(b)
    pbnorm = norm2(pb)
    evals = 1
    cap = min(opts.restart, n)
    V = np.empty((n, cap + 1), dtype=dtype, order="F")
    H = np.zeros((cap + 1, cap), dtype=dtype)
    trace: list[tuple[int, float]] = []
    iters = 0
    best_rel = math.inf
    best_x = None
    status = None
    reason = None
    stagnated = False
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        while True:
            r = b - A.matvec(x)
            rel = norm2(r) / bnorm
            evals += 1
            trace.append((iters, rel))
            if not np.isfinite(rel):
                status = SolveStatus.BREAKDOWN
                reason = "divergence"
                x = _breakdown_iterate(x, best_x, x0_fallback)
                break
            if rel < best_rel:
                best_rel = rel
                best_x = x
            if rel <= opts.tol:
                status = SolveStatus.CONVERGED
                break
            if stagnated:
                status = SolveStatus.BREAKDOWN
                reason = "stagnation"
                x = best_x if best_x is not None else x
                break
            if iters >= opts.max_iter or (
                deadline is not None and time.monotonic() >= deadline
            ):
                status = SolveStatus.MAX_ITER
                x = best_x if best_x is not None else x
                break
            z = P.apply(r)
            znorm = norm2(z)
            evals += 1
            if znorm == 0.0 or not np.isfinite(znorm):
                status = SolveStatus.BREAKDOWN
                reason = "stagnation"
                break
            mdim = min(cap, opts.max_iter - iters)
            V[:, 0] = z / znorm
            g = np.zeros(mdim + 1, dtype=dtype)
            g[0] = znorm
            H[: mdim + 1, :mdim] = 0
            rot = []
            dim = mdim
            for j in range(mdim):
                w = P.apply(A.matvec(V[:, j]))
                for i in range(j + 1):
                    hij = np.vdot(V[:, i], w)
                    H[i, j] = hij
                    w = w - hij * V[:, i]
                hnext = norm2(w)
                H[j + 1, j] = hnext
                happy = hnext == 0.0
                if not happy:
                    V[:, j + 1] = w / hnext
                for idx, (g11, g12) in enumerate(rot):
                    u1 = H[idx, j]
                    u2 = H[idx + 1, j]
                    H[idx, j] = g11 * u1 + g12 * u2
                    H[idx + 1, j] = -np.conj(g12) * u1 + np.conj(g11) * u2
                g11, g12, t = _givens(H[j, j], H[j + 1, j])
                rot.append((g11, g12))
                H[j, j] = t
                H[j + 1, j] = 0
                g[j + 1] = -np.conj(g12) * g[j]
                g[j] = g11 * g[j]
                est = abs(g[j + 1])
                evals += 1
                iters += 1
                if happy:
                    stagnated = True
                    dim = j + 1
                    break
                if est <= opts.tol * pbnorm or (
                    deadline is not None and time.monotonic() >= deadline
                ):
                    dim = j + 1
                    break
            # A negligible pivot appears when M^{-1} A is singular and the
            # cycle ends in a happy breakdown; truncate to the leading
            # nonsingular block instead of dividing by (near) zero.
            diag = np.abs(np.diagonal(H)[:dim])
            tiny = (diag.max() if dim else 0.0) * 1e-14
            cut = dim
            for i in range(dim):
                if diag[i] <= tiny:
                    cut = i
                    break
            y = g[:dim].copy()
            y[cut:] = 0
            for i in range(cut - 1, -1, -1):
                if i + 1 < cut:
                    y[i] = y[i] - H[i, i + 1 : cut] @ y[i + 1 : cut]
                y[i] = y[i] / H[i, i]
            x = x + V[:, :dim] @ y
    return SolveReport(
        x=x,
        residual_trace=trace,
        iterations=iters,
        extrapolations=0,
        status=status,
        breakdown_reason=reason,
        residual_norm_evals=evals,
    )


def bicgstab_solve(
    A: SparseMatrix,
    b,
    x0=None,
    P=None,
    opts: KrylovOptions | None = None,
    *,
    deadline: float | None = None,
) -> SolveReport:
    """Preconditioned Bi-CGSTAB with the standard two-stage recurrence.

    The recurrence carries the unpreconditioned residual; scalar magnitudes
    below 1e-30 in the rho or omega steps stop the solve with a breakdown.
    """
    opts = KrylovOptions() if opts is None else opts
    opts.validate()
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
    thr = opts.tol
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        r = b - A.matvec(x)
        rtilde = r.copy()
        rho_prev = 1.0
        alpha = 1.0
        omega_prev = 1.0
        v = np.zeros(n, dtype=dtype)
        p = np.zeros(n, dtype=dtype)
        for k in range(opts.max_iter):
            rel = norm2(r) / bnorm
            evals += 1
            trace.append((k, rel))
            if not np.isfinite(rel):
                status = SolveStatus.BREAKDOWN
                reason = "divergence"
                x = _breakdown_iterate(x, best_x, x0_fallback)
                iterations = k
                break
            if rel < best_rel:
                best_rel = rel
                best_x = x
            if rel <= thr:
                r_true = b - A.matvec(x)
                rel_true = norm2(r_true) / bnorm
                evals += 1
                if rel_true <= opts.tol:
                    trace[-1] = (k, rel_true)
                    status = SolveStatus.CONVERGED
                    iterations = k
                    break
                thr = thr * 0.5
            if deadline is not None and time.monotonic() >= deadline:
                status = SolveStatus.MAX_ITER
                x = best_x if best_x is not None else x
                iterations = k
                break
            rho = np.vdot(rtilde, r)
            if abs(rho) < _BREAKDOWN_EPS:
                status = SolveStatus.BREAKDOWN
                reason = "bicgstab breakdown"
                iterations = k
                break
            beta = (rho / rho_prev) * (alpha / omega_prev)
            p = r + beta * (p - omega_prev * v)
            phat = P.apply(p)
            v = A.matvec(phat)
            denom = np.vdot(rtilde, v)
            if abs(denom) < _BREAKDOWN_EPS:
                status = SolveStatus.BREAKDOWN
                reason = "bicgstab breakdown"
                iterations = k
                break
            alpha = rho / denom
            s = r - alpha * v
            rel_s = norm2(s) / bnorm
            evals += 1
            if rel_s <= thr:
                x_half = x + alpha * phat
                r_true = b - A.matvec(x_half)
                rel_true = norm2(r_true) / bnorm
                evals += 1
                if rel_true <= opts.tol:
                    x = x_half
                    trace.append((k + 1, rel_true))
                    status = SolveStatus.CONVERGED
                    iterations = k + 1
                    break
            shat = P.apply(s)
            t = A.matvec(shat)
            tt = np.vdot(t, t).real
            if tt == 0.0 or not np.isfinite(tt):
                status = SolveStatus.BREAKDOWN
                reason = "bicgstab breakdown"
                iterations = k
                break
            omega = np.vdot(t, s) / tt
            if abs(omega) < _BREAKDOWN_EPS:
                status = SolveStatus.BREAKDOWN
                reason = "bicgstab breakdown"
                iterations = k
                break
            x = x + alpha * phat + omega * shat
            r = s - omega * t
            rho_prev = rho
            omega_prev = omega
        else:
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
        extrapolations=0,
        status=status,
        breakdown_reason=reason,
        residual_norm_evals=evals,
    )


def cg_solve(
    A: SparseMatrix,
    b,
    x0=None,
    P=None,
    opts: KrylovOptions | None = None,
    *,
    deadline: float | None = None,
) -> SolveReport:
    """Preconditioned conjugate gradients for hermitian positive (semi)definite systems.

    Definiteness is not verified up front; a nonpositive curvature p^H A p
    stops the solve with an "indefinite" breakdown.
    """
    opts = KrylovOptions() if opts is None else opts
    opts.validate()
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
    thr = opts.tol
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        r = b - A.matvec(x)
        z = P.apply(r)
        p = z
        rz = np.vdot(r, z)
        for k in range(opts.max_iter):
            rel = norm2(r) / bnorm
            evals += 1
            trace.append((k, rel))
            if not np.isfinite(rel):
                status = SolveStatus.BREAKDOWN
                reason = "divergence"
                x = _breakdown_iterate(x, best_x, x0_fallback)
                iterations = k
                break
            if rel < best_rel:
                best_rel = rel
                best_x = x
            if rel <= thr:
                r_true = b - A.matvec(x)
                rel_true = norm2(r_true) / bnorm
                evals += 1
                if rel_true <= opts.tol:
                    trace[-1] = (k, rel_true)
                    status = SolveStatus.CONVERGED
                    iterations = k
                    break
                thr = thr * 0.5
            if deadline is not None and time.monotonic() >= deadline:
                status = SolveStatus.MAX_ITER
                x = best_x if best_x is not None else x
                iterations = k
                break
            if abs(rz) < _BREAKDOWN_EPS:
                status = SolveStatus.BREAKDOWN
                reason = "indefinite"
                iterations = k
                break
            Ap = A.matvec(p)
            pAp = np.vdot(p, Ap).real
            if pAp <= 0.0 or not np.isfinite(pAp):
                status = SolveStatus.BREAKDOWN
                reason = "indefinite"
                iterations = k
                break
            step = rz / pAp
            x = x + step * p
            r = r - step * Ap
            z = P.apply(r)
            rz_new = np.vdot(r, z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        else:
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
        extrapolations=0,
        status=status,
        breakdown_reason=reason,
        residual_norm_evals=evals,
    )
