"""Second-order additive Runge-Kutta pair and its linear analysis.

The explicit and implicit tableaux share weights and abscissae. The
implicit half is TR-BDF2 for ``gamma = 2 - sqrt(2)``; the explicit half has
a free parameter ``alpha`` in its last row.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GAMMA = 2.0 - math.sqrt(2.0)
ALPHA_ORIGINAL = (7.0 - 2.0 * GAMMA) / 6.0
ALPHA_DEFAULT = 0.5


@dataclass(frozen=True)
class ImexTableau:
    a: np.ndarray
    a_tilde: np.ndarray
    b: np.ndarray
    c: np.ndarray
    alpha: float
    gamma_const: float = GAMMA

    @property
    def stages(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class CourantPair:
    C: float
    C_u: float


def ark2(alpha: float = ALPHA_DEFAULT) -> ImexTableau:
    g = GAMMA
    s2 = math.sqrt(2.0)
    a = np.array([[0.0, 0.0, 0.0], [g, 0.0, 0.0], [1.0 - alpha, alpha, 0.0]])
    at = np.array([
        [0.0, 0.0, 0.0],
        [0.5 * g, 0.5 * g, 0.0],
        [0.5 / s2, 0.5 / s2, 1.0 - 1.0 / s2],
    ])
    b = np.array([0.5 - 0.25 * g, 0.5 - 0.25 * g, 0.5 * g])
    c = np.array([0.0, g, 1.0])
    return ImexTableau(a=a, a_tilde=at, b=b, c=c, alpha=float(alpha))


# --------------------------------------------------------------------------
# absolute monotonicity


def monotonicity_matrices(tableau: ImexTableau, xi: float):
    """Return ``A(xi) = A (I - xi A)^-1``, ``b(xi)``, ``e(xi)`` and ``phi(xi)``.

    Only the explicit tableau enters. ``b(xi)`` is ``b^T (I - xi A)^-1``.
    """
    A = tableau.a
    n = A.shape[0]
    inv = np.linalg.inv(np.eye(n) - xi * A)
    A_xi = A @ inv
    b_xi = tableau.b @ inv
    e_xi = inv @ np.ones(n)
    phi = 1.0 + xi * (tableau.b @ inv @ np.ones(n))
    return A_xi, b_xi, e_xi, phi


def _monotone_at(tableau: ImexTableau, xi: float, tol: float = 0.0) -> bool:
    A_xi, b_xi, e_xi, phi = monotonicity_matrices(tableau, xi)
    return bool((A_xi >= -tol).all() and (b_xi >= -tol).all() and (e_xi >= -tol).all() and phi >= -tol)


def monotonicity_radius(tableau: ImexTableau, scan_resolution: float = 1e-4, xi_max: float = 10.0,
                        bisect_tol: float = 1e-13) -> float:
    """Radius of absolute monotonicity of the explicit tableau.

    The interval ``[-xi_max, 0]`` is scanned with step ``scan_resolution``
    for the first violation, which is then located by bisection.
    """
    if scan_resolution > 1e-4:
        raise ValueError("scan_resolution must not exceed 1e-4")
    # the conditions are polynomial in xi and hold at 0; scan leftwards
    prev = 0.0
    n = int(math.ceil(xi_max / scan_resolution))
    found = None
    for k in range(1, n + 1):
        x = -k * scan_resolution
        if not _monotone_at(tableau, x):
            found = x
            break
        prev = x
    if found is None:
        return xi_max
    lo, hi = found, prev  # violation at lo, fine at hi
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if _monotone_at(tableau, mid):
            hi = mid
        else:
            lo = mid
    return -hi


def monotonicity_radius_fast(alpha: float) -> float:
    """Closed-form radius from the entrywise conditions (used for dense alpha sweeps).

    With ``(I - xi A)^-1 = I + xi A + xi^2 A^2`` every entry is a low degree
    polynomial in ``xi``: ``A(xi)_31 = 1 - alpha + alpha gamma xi``,
    ``e(xi)_2 = 1 + gamma xi``, ``e(xi)_3``, ``b1(xi)``, ``b2(xi)`` and
    ``phi``. The radius is the distance to the nearest non-positive root.
    """
    tab = ark2(alpha)
    g = GAMMA
    if alpha < 0.0 or alpha >= 1.0:
        # a32 < 0, or A(xi)_31 <= 0 already at xi = 0
        return 0.0
    cands = [-1.0 / g]
    if alpha > 0.0:
        cands.append(-(1.0 - alpha) / (alpha * g))
    # b1(xi) = (2 + g(-1 + xi(4 - g + 2 alpha(g xi - 1))))/4, quadratic in xi
    b1 = [2.0 * alpha * g * g, g * (4.0 - g - 2.0 * alpha), 2.0 - g]
    b2 = [2.0 * alpha * g, 2.0 - g]
    e3 = [alpha * g, 1.0, 1.0]
    ph = [(3.0 - 2.0 * math.sqrt(2.0)) * alpha, 0.5, 1.0, 1.0]
    for poly in (b1, b2, e3, ph):
        for root in np.roots(poly):
            if abs(root.imag) < 1e-12 and root.real <= 0:
                cands.append(root.real)
    neg = [c for c in cands if c <= 0]
    r = -max(neg) if neg else math.inf
    # guard against a mis-specified candidate list
    if math.isfinite(r) and r > 0 and not _monotone_at(tab, -r * (1 - 1e-9), tol=1e-12):
        return monotonicity_radius(tab)
    return r


def stability_function(alpha: float, z):
    """Linear stability function ``1 + z + alpha gamma z^2`` of the explicit stages."""
    return 1.0 + z + alpha * GAMMA * z * z


def stability_boundary(alpha: float, axis: str = "imaginary", y_max: float = 20.0, tol: float = 1e-12) -> float:
    """Extent of the stability region along the imaginary axis.

    Returns the largest ``y`` such that ``|R(i y')| < 1`` for every ``0 < y' < y``.
    """
    if axis != "imaginary":
        raise ValueError("only the imaginary axis is supported")

    def inside(y):
        return abs(stability_function(alpha, 1j * y)) < 1.0

    step = 1e-3
    y = step
    if not inside(y):
        return 0.0
    while y < y_max and inside(y + step):
        y += step
    if y >= y_max:
        return y_max
    lo, hi = y, y + step
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return lo


def imaginary_extent_closed_form(alpha: float) -> float:
    """``|1 + iy - alpha gamma y^2|^2 < 1`` holds for ``0 < y < sqrt(2 alpha gamma - 1)/(alpha gamma)``."""
    ag = alpha * GAMMA
    if 2.0 * ag <= 1.0:
        return 0.0
    return math.sqrt(2.0 * ag - 1.0) / ag


def analyze_tableau(alpha_min: float, alpha_max: float, steps: int):
    """Rows of ``(alpha, R, imaginary extent)`` for a uniform alpha grid."""
    rows = []
    for alpha in np.linspace(alpha_min, alpha_max, int(steps)):
        rows.append((float(alpha), monotonicity_radius_fast(float(alpha)), imaginary_extent_closed_form(float(alpha))))
    return rows


# --------------------------------------------------------------------------
# Courant numbers


def courant_numbers(c_max: float, u_max: float, H: float, dt: float, degree: int, mach: float) -> CourantPair:
    """Acoustic ``r c dt/(M H)`` and advective ``r |u| dt/H`` Courant numbers.

    ``c_max`` and ``u_max`` are maxima over quadrature points, ``H`` the
    smallest cell size.
    """
    r = max(int(degree), 1)
    return CourantPair(C=r * c_max * dt / (mach * H), C_u=r * u_max * dt / H)


def dt_for_courant(C: float, c_max: float, H: float, degree: int, mach: float) -> float:
    r = max(int(degree), 1)
    return C * mach * H / (r * c_max)
