"""Matrix-free Krylov solvers.

Operators are callables on flat vectors; the solvers never form matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import IndefiniteOperator, NoConvergence


@dataclass
class LinearOperator:
    apply: Callable[[np.ndarray], np.ndarray]
    size: int
    diagonal: Optional[np.ndarray] = None

    def __call__(self, x):
        return self.apply(x)


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool


def _as_op(op):
    return op.apply if isinstance(op, LinearOperator) else op


def jacobi(diagonal: np.ndarray) -> Callable:
    inv = 1.0 / np.asarray(diagonal, dtype=float)
    return lambda r: inv * r


def cg(op, rhs, tol: float = 1e-12, maxit: int = 1000, precond: Optional[Callable] = None, x0=None,
       raise_on_fail: bool = True):
    """Preconditioned conjugate gradients.

    Stops when ``||b - A x|| <= tol ||b||``. Raises :class:`IndefiniteOperator`
    on non-positive curvature and :class:`NoConvergence` after ``maxit``.
    """
    A = _as_op(op)
    b = np.asarray(rhs, dtype=float)
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0, True)
    r = b - A(x) if x0 is not None else b.copy()
    res = np.linalg.norm(r) / bnorm
    if res <= tol:
        return x, SolveReport(0, res, True)
    z = precond(r) if precond else r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxit + 1):
        Ap = A(p)
        curv = p @ Ap
        if curv <= 0.0:
            raise IndefiniteOperator(f"p^T A p = {curv:.3e} <= 0 at iteration {it}")
        step = rz / curv
        x += step * p
        r -= step * Ap
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, SolveReport(it, res, True)
        z = precond(r) if precond else r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    if raise_on_fail:
        raise NoConvergence(f"CG: residual {res:.3e} after {maxit} iterations")
    return x, SolveReport(maxit, res, False)


def gmres(op, rhs, tol: float = 1e-10, maxit: int = 1000, restart: int = 50, precond: Optional[Callable] = None,
          x0=None, raise_on_fail: bool = True):
    """Restarted GMRES with right preconditioning.

    Right preconditioning keeps the monitored residual equal to the true
    residual ``||b - A x||``, so the stopping test needs no correction.
    """
    A = _as_op(op)
    M = precond if precond is not None else (lambda v: v)
    b = np.asarray(rhs, dtype=float)
    n = b.size
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True)
    r = b - A(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    total = 0
    res = beta / bnorm
    if res <= tol:
        return x, SolveReport(0, res, True)
    m = max(1, min(restart, n))
    while total < maxit:
        V = np.zeros((m + 1, n))
        Hm = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        Z = np.zeros((m, n))
        j_used = 0
        for j in range(m):
            Z[j] = M(V[j])
            w = np.array(A(Z[j]), dtype=float)
            # modified Gram-Schmidt, then one reorthogonalization pass
            for i in range(j + 1):
                Hm[i, j] = w @ V[i]
                w -= Hm[i, j] * V[i]
            for i in range(j + 1):
                corr = w @ V[i]
                Hm[i, j] += corr
                w -= corr * V[i]
            Hm[j + 1, j] = np.linalg.norm(w)
            if Hm[j + 1, j] > 0:
                V[j + 1] = w / Hm[j + 1, j]
            for i in range(j):
                tmp = cs[i] * Hm[i, j] + sn[i] * Hm[i + 1, j]
                Hm[i + 1, j] = -sn[i] * Hm[i, j] + cs[i] * Hm[i + 1, j]
                Hm[i, j] = tmp
            denom = np.hypot(Hm[j, j], Hm[j + 1, j])
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = Hm[j, j] / denom, Hm[j + 1, j] / denom
            Hm[j, j] = cs[j] * Hm[j, j] + sn[j] * Hm[j + 1, j]
            Hm[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            total += 1
            j_used = j + 1
            res = abs(g[j + 1]) / bnorm
            if res <= tol or total >= maxit or Hm[j, j] == 0.0:
                break
        y = np.linalg.solve(np.triu(Hm[:j_used, :j_used]), g[:j_used]) if j_used else np.zeros(0)
        x = x + y @ Z[:j_used]
        r = b - A(x)
        beta = np.linalg.norm(r)
        res = beta / bnorm
        if res <= tol:
            return x, SolveReport(total, res, True)
        if beta == 0.0:
            break
    if raise_on_fail:
        raise NoConvergence(f"GMRES: residual {res:.3e} after {total} iterations")
    return x, SolveReport(total, res, False)


def block_jacobi(blocks: np.ndarray, shape) -> Callable:
    """Preconditioner applying the inverse of cellwise dense blocks ``(n_cells, k, k)``.

    ``shape`` is the unflattened shape of a vector (``(..., n_cells, k)``).
    """
    inv = np.linalg.inv(blocks)

    def apply(v):
        V = v.reshape(shape)
        return np.einsum("cij,...cj->...ci", inv, V).reshape(-1)

    return apply
