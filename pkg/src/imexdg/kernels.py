"""Hot loops with two interchangeable implementations.

Each public function dispatches to a numba-compiled loop or to a vectorized
numpy version depending on :mod:`imexdg._accel`. Both produce identical
results up to floating point reassociation.
"""
import numpy as np

from . import _accel
from ._accel import njit

WALL = 0
PERIODIC = 1


# --------------------------------------------------------------------------
# Peng-Robinson temperature with Soave alpha


def _soave_rhs_np(p, rho, T, ac, kappa, Tc, b, r1, r2, Rg):
    al = 1.0 + kappa * (1.0 - np.sqrt(T / Tc))
    q = (1.0 - rho * b * r1) * (1.0 - rho * b * r2)
    return (p + ac * al * al * rho * rho / q) * (1.0 - rho * b) / (rho * Rg)


def _soave_temperature_np(p, rho, T0, ac, kappa, Tc, b, r1, r2, Rg, max_iter, tol):
    T = T0.copy()
    ok = np.zeros(T.shape, dtype=np.bool_)
    for _ in range(max_iter):
        Tn = _soave_rhs_np(p, rho, T, ac, kappa, Tc, b, r1, r2, Rg)
        ok = np.abs(Tn - T) <= tol * np.maximum(1.0, np.abs(Tn))
        T = Tn
        if ok.all():
            break
    return T, ok


@njit
def _soave_temperature_nb(p, rho, T0, ac, kappa, Tc, b, r1, r2, Rg, max_iter, tol):
    n = p.shape[0]
    T = np.empty(n)
    ok = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        t = T0[i]
        q = (1.0 - rho[i] * b * r1) * (1.0 - rho[i] * b * r2)
        fac = (1.0 - rho[i] * b) / (rho[i] * Rg)
        for _ in range(max_iter):
            al = 1.0 + kappa * (1.0 - np.sqrt(t / Tc))
            tn = (p[i] + ac * al * al * rho[i] * rho[i] / q) * fac
            done = abs(tn - t) <= tol * max(1.0, abs(tn))
            t = tn
            if done:
                ok[i] = True
                break
        T[i] = t
    return T, ok


def soave_temperature(p, rho, T0, ac, kappa, Tc, b, r1, r2, Rg, max_iter=100, tol=1e-12):
    """Fixed-point temperature inversion for every entry of the flat arrays."""
    args = (np.ascontiguousarray(p, dtype=float), np.ascontiguousarray(rho, dtype=float),
            np.ascontiguousarray(T0, dtype=float), float(ac), float(kappa), float(Tc), float(b),
            float(r1), float(r2), float(Rg), int(max_iter), float(tol))
    if _accel.use_numba():
        return _soave_temperature_nb(*args)
    return _soave_temperature_np(*args)


# --------------------------------------------------------------------------
# first-order finite volumes with the local Lax-Friedrichs flux


@njit
def _llf_1d_nb(rho, mu, rhoE, p, s, dx, inv_m2, bc_lo, bc_hi):
    n = rho.shape[0]
    res = np.zeros((3, n))
    for f in range(n + 1):
        # left state index l, right state index r; -1 marks a mirror ghost
        if f == 0 or f == n:
            if bc_lo == PERIODIC:
                if f == n:
                    continue
                l, r = n - 1, 0
            else:
                l, r = (-1, 0) if f == 0 else (n - 1, -1)
        else:
            l, r = f - 1, f
        if l >= 0:
            rl, ml, el, pl, sl = rho[l], mu[l], rhoE[l], p[l], s[l]
        else:
            rl, ml, el, pl, sl = rho[r], -mu[r], rhoE[r], p[r], s[r]
        if r >= 0:
            rr, mr, er, pr, sr = rho[r], mu[r], rhoE[r], p[r], s[r]
        else:
            rr, mr, er, pr, sr = rho[l], -mu[l], rhoE[l], p[l], s[l]
        ul = ml / rl
        ur = mr / rr
        lam = max(sl, sr)
        f0 = 0.5 * (ml + mr) - 0.5 * lam * (rr - rl)
        f1 = 0.5 * (ml * ul + pl * inv_m2 + mr * ur + pr * inv_m2) - 0.5 * lam * (mr - ml)
        f2 = 0.5 * ((el + pl) * ul + (er + pr) * ur) - 0.5 * lam * (er - el)
        if l >= 0:
            res[0, l] -= f0 / dx
            res[1, l] -= f1 / dx
            res[2, l] -= f2 / dx
        if r >= 0:
            res[0, r] += f0 / dx
            res[1, r] += f1 / dx
            res[2, r] += f2 / dx
    return res


def _llf_flux_np(rl, ml, el, pl, sl, rr, mr, er, pr, sr, inv_m2):
    ul = ml / rl
    ur = mr / rr
    lam = np.maximum(sl, sr)
    f0 = 0.5 * (ml + mr) - 0.5 * lam * (rr - rl)
    f1 = 0.5 * (ml * ul + pl * inv_m2 + mr * ur + pr * inv_m2) - 0.5 * lam * (mr - ml)
    f2 = 0.5 * ((el + pl) * ul + (er + pr) * ur) - 0.5 * lam * (er - el)
    return f0, f1, f2


def _pad_1d(a, bc_lo, bc_hi, flip=False):
    sign = -1.0 if flip else 1.0
    lo = a[-1:] if bc_lo == PERIODIC else sign * a[:1]
    hi = a[:1] if bc_hi == PERIODIC else sign * a[-1:]
    return np.concatenate([lo, a, hi])


def _llf_1d_np(rho, mu, rhoE, p, s, dx, inv_m2, bc_lo, bc_hi):
    R = _pad_1d(rho, bc_lo, bc_hi)
    Mu = _pad_1d(mu, bc_lo, bc_hi, flip=True)
    E = _pad_1d(rhoE, bc_lo, bc_hi)
    P = _pad_1d(p, bc_lo, bc_hi)
    S = _pad_1d(s, bc_lo, bc_hi)
    f0, f1, f2 = _llf_flux_np(R[:-1], Mu[:-1], E[:-1], P[:-1], S[:-1], R[1:], Mu[1:], E[1:], P[1:], S[1:], inv_m2)
    F = np.stack([f0, f1, f2])
    return -(F[:, 1:] - F[:, :-1]) / dx


def llf_residual_1d(rho, mu, rhoE, p, s, dx, mach2, bc_lo=WALL, bc_hi=WALL):
    """Cell residual ``-(F_{i+1/2} - F_{i-1/2})/dx`` for (rho, rho u, rho E).

    ``s`` is the per-cell wave speed bound ``|u| + c/M``. Wall sides use a
    mirror ghost cell.
    """
    args = (np.ascontiguousarray(rho, dtype=float), np.ascontiguousarray(mu, dtype=float),
            np.ascontiguousarray(rhoE, dtype=float), np.ascontiguousarray(p, dtype=float),
            np.ascontiguousarray(s, dtype=float), float(dx), 1.0 / float(mach2), int(bc_lo), int(bc_hi))
    if _accel.use_numba():
        return _llf_1d_nb(*args)
    return _llf_1d_np(*args)


@njit
def _llf_2d_nb(rho, mx, my, rhoE, p, s, dx, dy, inv_m2, bc_x, bc_y):
    nx, ny = rho.shape
    res = np.zeros((4, nx, ny))
    # x-normal faces
    for j in range(ny):
        for f in range(nx + 1):
            if f == 0 or f == nx:
                if bc_x == PERIODIC:
                    if f == nx:
                        continue
                    l, r = nx - 1, 0
                else:
                    l, r = (-1, 0) if f == 0 else (nx - 1, -1)
            else:
                l, r = f - 1, f
            if l >= 0:
                rl, ul_n, ul_t, el, pl, sl = rho[l, j], mx[l, j], my[l, j], rhoE[l, j], p[l, j], s[l, j]
            else:
                rl, ul_n, ul_t, el, pl, sl = rho[r, j], -mx[r, j], my[r, j], rhoE[r, j], p[r, j], s[r, j]
            if r >= 0:
                rr, ur_n, ur_t, er, pr, sr = rho[r, j], mx[r, j], my[r, j], rhoE[r, j], p[r, j], s[r, j]
            else:
                rr, ur_n, ur_t, er, pr, sr = rho[l, j], -mx[l, j], my[l, j], rhoE[l, j], p[l, j], s[l, j]
            vl = ul_n / rl
            vr = ur_n / rr
            lam = max(sl, sr)
            f0 = 0.5 * (ul_n + ur_n) - 0.5 * lam * (rr - rl)
            f1 = 0.5 * (ul_n * vl + pl * inv_m2 + ur_n * vr + pr * inv_m2) - 0.5 * lam * (ur_n - ul_n)
            f2 = 0.5 * (ul_t * vl + ur_t * vr) - 0.5 * lam * (ur_t - ul_t)
            f3 = 0.5 * ((el + pl) * vl + (er + pr) * vr) - 0.5 * lam * (er - el)
            if l >= 0:
                res[0, l, j] -= f0 / dx
                res[1, l, j] -= f1 / dx
                res[2, l, j] -= f2 / dx
                res[3, l, j] -= f3 / dx
            if r >= 0:
                res[0, r, j] += f0 / dx
                res[1, r, j] += f1 / dx
                res[2, r, j] += f2 / dx
                res[3, r, j] += f3 / dx
    # y-normal faces
    for i in range(nx):
        for f in range(ny + 1):
            if f == 0 or f == ny:
                if bc_y == PERIODIC:
                    if f == ny:
                        continue
                    l, r = ny - 1, 0
                else:
                    l, r = (-1, 0) if f == 0 else (ny - 1, -1)
            else:
                l, r = f - 1, f
            if l >= 0:
                rl, ul_n, ul_t, el, pl, sl = rho[i, l], my[i, l], mx[i, l], rhoE[i, l], p[i, l], s[i, l]
            else:
                rl, ul_n, ul_t, el, pl, sl = rho[i, r], -my[i, r], mx[i, r], rhoE[i, r], p[i, r], s[i, r]
            if r >= 0:
                rr, ur_n, ur_t, er, pr, sr = rho[i, r], my[i, r], mx[i, r], rhoE[i, r], p[i, r], s[i, r]
            else:
                rr, ur_n, ur_t, er, pr, sr = rho[i, l], -my[i, l], mx[i, l], rhoE[i, l], p[i, l], s[i, l]
            vl = ul_n / rl
            vr = ur_n / rr
            lam = max(sl, sr)
            f0 = 0.5 * (ul_n + ur_n) - 0.5 * lam * (rr - rl)
            f1 = 0.5 * (ul_n * vl + pl * inv_m2 + ur_n * vr + pr * inv_m2) - 0.5 * lam * (ur_n - ul_n)
            f2 = 0.5 * (ul_t * vl + ur_t * vr) - 0.5 * lam * (ur_t - ul_t)
            f3 = 0.5 * ((el + pl) * vl + (er + pr) * vr) - 0.5 * lam * (er - el)
            if l >= 0:
                res[0, i, l] -= f0 / dy
                res[2, i, l] -= f1 / dy
                res[1, i, l] -= f2 / dy
                res[3, i, l] -= f3 / dy
            if r >= 0:
                res[0, i, r] += f0 / dy
                res[2, i, r] += f1 / dy
                res[1, i, r] += f2 / dy
                res[3, i, r] += f3 / dy
    return res


def _pad_axis(a, axis, bc, flip=False):
    sign = -1.0 if flip else 1.0
    first = np.take(a, [0], axis=axis)
    last = np.take(a, [-1], axis=axis)
    if bc == PERIODIC:
        return np.concatenate([last, a, first], axis=axis)
    return np.concatenate([sign * first, a, sign * last], axis=axis)


def _llf_2d_np(rho, mx, my, rhoE, p, s, dx, dy, inv_m2, bc_x, bc_y):
    res = np.zeros((4,) + rho.shape)
    for axis, (mn, mt, h, bc) in enumerate(((mx, my, dx, bc_x), (my, mx, dy, bc_y))):
        R = _pad_axis(rho, axis, bc)
        N = _pad_axis(mn, axis, bc, flip=True)
        Tt = _pad_axis(mt, axis, bc)
        E = _pad_axis(rhoE, axis, bc)
        P = _pad_axis(p, axis, bc)
        S = _pad_axis(s, axis, bc)
        sl = [slice(None)] * 2
        sr = [slice(None)] * 2
        sl[axis] = slice(None, -1)
        sr[axis] = slice(1, None)
        sl, sr = tuple(sl), tuple(sr)
        f0, f1, f3 = _llf_flux_np(R[sl], N[sl], E[sl], P[sl], S[sl], R[sr], N[sr], E[sr], P[sr], S[sr], inv_m2)
        lam = np.maximum(S[sl], S[sr])
        f2 = 0.5 * (Tt[sl] * N[sl] / R[sl] + Tt[sr] * N[sr] / R[sr]) - 0.5 * lam * (Tt[sr] - Tt[sl])
        d0 = [slice(None)] * 2
        d1 = [slice(None)] * 2
        d0[axis] = slice(1, None)
        d1[axis] = slice(None, -1)
        d0, d1 = tuple(d0), tuple(d1)
        normal, tangential = (1, 2) if axis == 0 else (2, 1)
        res[0] -= (f0[d0] - f0[d1]) / h
        res[normal] -= (f1[d0] - f1[d1]) / h
        res[tangential] -= (f2[d0] - f2[d1]) / h
        res[3] -= (f3[d0] - f3[d1]) / h
    return res


def llf_residual_2d(rho, mx, my, rhoE, p, s, dx, dy, mach2, bc_x=WALL, bc_y=WALL):
    """Two-dimensional analogue of :func:`llf_residual_1d` on an ``(nx, ny)`` grid.

    Returns an array of shape ``(4, nx, ny)`` ordered (rho, rho u, rho v, rho E).
    """
    c = np.ascontiguousarray
    args = (c(rho, dtype=float), c(mx, dtype=float), c(my, dtype=float), c(rhoE, dtype=float), c(p, dtype=float),
            c(s, dtype=float), float(dx), float(dy), 1.0 / float(mach2), int(bc_x), int(bc_y))
    if _accel.use_numba():
        return _llf_2d_nb(*args)
    return _llf_2d_np(*args)
