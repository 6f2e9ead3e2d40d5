"""Restarted GMRES with modified Gram-Schmidt and optional right preconditioning."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

REORTH_THRESHOLD = 1e-8
CONVERGED = ("converged", "converged-by-breakdown")


class GMRESBreakdown(RuntimeError):
    pass


@dataclass
class GMRESResult:
    x: np.ndarray
    iterations: int
    status: str
    bnorm: float
    residuals: list = field(default_factory=list)  # absolute 2-norms, entry 0 = initial
    seconds: list = field(default_factory=list)    # elapsed time at each residual

    @property
    def converged(self) -> bool:
        return self.status in CONVERGED

    @property
    def relative_residuals(self) -> np.ndarray:
        scale = self.bnorm if self.bnorm > 0 else 1.0
        return np.asarray(self.residuals) / scale


def _givens(a, b):
    if b == 0.0:
        return 1.0, 0.0
    r = np.hypot(a, b)
    return a / r, b / r


def gmres(matvec: Callable, b: np.ndarray, tol: float = 1e-6, max_iters: int = 1000,
          restart: Optional[int] = None, precond: Optional[Callable] = None,
          atol: float = 0.0) -> GMRESResult:
    """Solve ``A x = b`` from a zero initial guess.

    With ``precond`` the iteration runs on ``A M^-1 y = b`` and returns
    ``x = M^-1 y``, so the monitored residual is the true residual of the
    original system.  Convergence: ``||r|| <= max(tol * ||b||, atol)``.
    ``iterations`` counts inner iterations over all restart cycles.
    """
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    n = b.size
    apply_m = precond if precond is not None else (lambda v: v)
    bnorm = float(np.linalg.norm(b))
    target = max(tol * bnorm, atol)
    m = restart or max_iters
    m = min(m, max_iters)

    y = np.zeros(n)  # iterate in the preconditioned variable
    residuals = [bnorm]
    seconds = [0.0]
    if bnorm <= target:
        return GMRESResult(np.zeros(n), 0, "converged", bnorm, residuals, seconds)

    total = 0
    r = b.copy()
    beta = bnorm
    while True:
        V = [r / beta]
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        k_used = 0
        done = False
        for k in range(m):
            w = matvec(apply_m(V[k]))
            wnorm0 = np.linalg.norm(w)
            for i in range(k + 1):
                H[i, k] = np.dot(V[i], w)
                w = w - H[i, k] * V[i]
            hnext = np.linalg.norm(w)
            if hnext > 0:
                loss = np.max(np.abs(np.array(V) @ (w / hnext)))
                if loss > REORTH_THRESHOLD:
                    for i in range(k + 1):
                        c = np.dot(V[i], w)
                        H[i, k] += c
                        w = w - c * V[i]
                    hnext = np.linalg.norm(w)
            H[k + 1, k] = hnext
            breakdown = hnext <= 1e-14 * max(wnorm0, 1e-300)
            if not breakdown:
                V.append(w / hnext)

            for i in range(k):
                t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
                H[i, k] = t
            cs[k], sn[k] = _givens(H[k, k], H[k + 1, k])
            H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]

            total += 1
            k_used = k + 1
            residuals.append(abs(g[k + 1]))
            seconds.append(time.perf_counter() - t0)
            if abs(g[k + 1]) <= target or breakdown or total >= max_iters:
                done = True
                break

        coef = np.linalg.solve(np.triu(H[:k_used, :k_used]), g[:k_used]) if k_used else []
        y = y + np.array(V[:k_used]).T @ coef
        x = apply_m(y)
        if done:
            if residuals[-1] <= target:
                return GMRESResult(x, total, "converged", bnorm, residuals, seconds)
            if breakdown:
                true_res = np.linalg.norm(b - matvec(x))
                if true_res <= target:
                    return GMRESResult(x, total, "converged-by-breakdown", bnorm, residuals, seconds)
                raise GMRESBreakdown(
                    f"GMRES breakdown at iteration {total} with residual {true_res:.3e}"
                )
            return GMRESResult(x, total, "max-iters", bnorm, residuals, seconds)
        # restart from the true residual
        r = b - matvec(x)
        beta = float(np.linalg.norm(r))
        if beta <= target:
            return GMRESResult(x, total, "converged", bnorm, residuals, seconds)
