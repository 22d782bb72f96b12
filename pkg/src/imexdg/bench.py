"""Benchmark cases, analytic oracles and explicit reference solvers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from . import eos as eosmod
from . import kernels
from .config import CaseConfig
from .dg import DgSpace
from .errors import CFLViolation, NonPhysicalState, VacuumFormation
from .hyperbolic import (
    FlowState,
    FluxMode,
    Physics,
    Pointwise,
    StageData,
    density_residual,
    energy_residual_explicit,
    enthalpy_flux_residual,
    momentum_residual_explicit,
    pressure_gradient_residual,
)
from .imex import ALPHA_ORIGINAL

# --------------------------------------------------------------------------
# isentropic vortex


@dataclass(frozen=True)
class VortexParams:
    beta: float = 10.0
    mach: float = 0.1
    gamma: float = 1.4
    rho_inf: float = 1.0
    p_inf: float = 1.0
    x0: float = 0.0
    y0: float = 0.0
    u_tilde_inf: tuple = (10.0, 10.0)
    lower: float = -10.0
    upper: float = 10.0

    @property
    def u_inf(self):
        return (self.mach * self.u_tilde_inf[0], self.mach * self.u_tilde_inf[1])


def vortex_exact(params: VortexParams, x, y, t: float = 0.0):
    """Density, velocity ``(2, ...)`` and pressure of the advected vortex.

    The pressure carries the ``M^2`` factor, so far away it tends to
    ``M^2`` (times ``p_inf``).
    """
    L = params.upper - params.lower
    ux, uy = params.u_inf
    xs = np.mod(np.asarray(x, dtype=float) - ux * t - params.lower, L) + params.lower - params.x0
    ys = np.mod(np.asarray(y, dtype=float) - uy * t - params.lower, L) + params.lower - params.y0
    r2 = xs * xs + ys * ys
    g, M, b = params.gamma, params.mach, params.beta
    dT = (1.0 - g) / (8.0 * g * math.pi**2) * M * M * b * b * np.exp(1.0 - r2)
    rho = params.rho_inf * (1.0 + dT) ** (1.0 / (g - 1.0))
    p = params.p_inf * M * M * (1.0 + dT) ** (g / (g - 1.0))
    f = b * M * np.exp(0.5 * (1.0 - r2)) / (2.0 * math.pi)
    u = np.stack([ux - ys * f, uy + xs * f])
    return rho, u, p


# --------------------------------------------------------------------------
# exact Riemann solver (ideal gas)


@dataclass(frozen=True)
class RiemannState:
    rho_l: float
    u_l: float
    p_l: float
    rho_r: float
    u_r: float
    p_r: float
    x_d: float = 0.0

    def __post_init__(self):
        if min(self.rho_l, self.rho_r, self.p_l, self.p_r) <= 0:
            raise NonPhysicalState("Riemann states need positive density and pressure")


SOD = RiemannState(1.0, 0.0, 1.0, 0.125, 0.0, 0.1, 0.0)


def _pressure_function(p, rho, pk, g):
    c = math.sqrt(g * pk / rho)
    if p > pk:
        A = 2.0 / ((g + 1.0) * rho)
        B = (g - 1.0) / (g + 1.0) * pk
        q = math.sqrt(A / (p + B))
        return (p - pk) * q, q * (1.0 - 0.5 * (p - pk) / (p + B))
    e = (g - 1.0) / (2.0 * g)
    return 2.0 * c / (g - 1.0) * ((p / pk) ** e - 1.0), (p / pk) ** (-(g + 1.0) / (2.0 * g)) / (rho * c)


def riemann_star(state: RiemannState, gamma: float, tol: float = 1e-14, max_iter: int = 100):
    """Star pressure and velocity; returns ``(p*, u*, |f(p*)|)``."""
    g = gamma
    cl = math.sqrt(g * state.p_l / state.rho_l)
    cr = math.sqrt(g * state.p_r / state.rho_r)
    du = state.u_r - state.u_l
    if 2.0 * (cl + cr) / (g - 1.0) <= du:
        raise VacuumFormation("initial data generate vacuum")
    # two-rarefaction guess
    e = (g - 1.0) / (2.0 * g)
    p = ((cl + cr - 0.5 * (g - 1.0) * du) / (cl / state.p_l**e + cr / state.p_r**e)) ** (1.0 / e)
    p = max(p, 1e-12)
    for _ in range(max_iter):
        fl, dl = _pressure_function(p, state.rho_l, state.p_l, g)
        fr, dr = _pressure_function(p, state.rho_r, state.p_r, g)
        f = fl + fr + du
        p_new = max(p - f / (dl + dr), 1e-14)
        done = abs(p_new - p) <= tol * 0.5 * (p_new + p)
        p = p_new
        if done:
            break
    fl, _ = _pressure_function(p, state.rho_l, state.p_l, g)
    fr, _ = _pressure_function(p, state.rho_r, state.p_r, g)
    u = 0.5 * (state.u_l + state.u_r) + 0.5 * (fr - fl)
    return p, u, abs(fl + fr + du)


def exact_riemann_ideal(state: RiemannState, gamma: float, x, t: float, mach: float = 1.0):
    """Sample the exact solution at positions ``x`` and time ``t``.

    With ``mach != 1`` the pressure is in the scaled form used by the solver
    (the classical problem is solved for ``p/M^2``).
    """
    x = np.asarray(x, dtype=float)
    s2 = mach * mach
    st = RiemannState(state.rho_l, state.u_l, state.p_l / s2, state.rho_r, state.u_r, state.p_r / s2, state.x_d)
    g = gamma
    ps, us, _ = riemann_star(st, g)
    if t <= 0:
        left = x < st.x_d
        return (np.where(left, st.rho_l, st.rho_r), np.where(left, st.u_l, st.u_r),
                np.where(left, st.p_l, st.p_r) * s2)
    S = (x - st.x_d) / t
    rho = np.empty_like(S)
    u = np.empty_like(S)
    p = np.empty_like(S)
    gm = (g - 1.0) / (g + 1.0)
    for side, sgn in (("l", -1.0), ("r", 1.0)):
        rk, uk, pk = getattr(st, "rho_" + side), getattr(st, "u_" + side), getattr(st, "p_" + side)
        ck = math.sqrt(g * pk / rk)
        mask = S < us if side == "l" else S >= us
        Sm = S[mask]
        r_o = np.empty_like(Sm)
        u_o = np.empty_like(Sm)
        p_o = np.empty_like(Sm)
        if ps > pk:  # shock
            rs = rk * (ps / pk + gm) / (gm * ps / pk + 1.0)
            Ssh = uk + sgn * ck * math.sqrt((g + 1.0) / (2.0 * g) * ps / pk + (g - 1.0) / (2.0 * g))
            outside = Sm < Ssh if sgn < 0 else Sm > Ssh
            r_o[:] = np.where(outside, rk, rs)
            u_o[:] = np.where(outside, uk, us)
            p_o[:] = np.where(outside, pk, ps)
        else:  # rarefaction
            rs = rk * (ps / pk) ** (1.0 / g)
            cs = ck * (ps / pk) ** ((g - 1.0) / (2.0 * g))
            head = uk + sgn * ck
            tail = us + sgn * cs
            outside = Sm < head if sgn < 0 else Sm > head
            inside = Sm > tail if sgn < 0 else Sm < tail
            fan = ~outside & ~inside
            r_o[outside], u_o[outside], p_o[outside] = rk, uk, pk
            r_o[inside], u_o[inside], p_o[inside] = rs, us, ps
            Sf = Sm[fan]
            uf = 2.0 / (g + 1.0) * (-sgn * ck + 0.5 * (g - 1.0) * uk + Sf)
            base = 2.0 / (g + 1.0) - sgn * gm / ck * (uk - Sf)
            r_o[fan] = rk * base ** (2.0 / (g - 1.0))
            u_o[fan] = uf
            p_o[fan] = pk * base ** (2.0 * g / (g - 1.0))
        rho[mask], u[mask], p[mask] = r_o, u_o, p_o
    return rho, u, p * s2


def shock_position(state: RiemannState, gamma: float, t: float) -> float:
    """Location of the right-moving shock of a Sod-type problem."""
    ps, us, _ = riemann_star(state, gamma)
    cr = math.sqrt(gamma * state.p_r / state.rho_r)
    S = state.u_r + cr * math.sqrt((gamma + 1.0) / (2.0 * gamma) * ps / state.p_r + (gamma - 1.0) / (2.0 * gamma))
    return state.x_d + S * t


# --------------------------------------------------------------------------
# explicit references


def _ssp_rk3(U, rhs, dt):
    U1 = U + dt * rhs(U)
    U2 = 0.75 * U + 0.25 * (U1 + dt * rhs(U1))
    return U / 3.0 + 2.0 / 3.0 * (U2 + dt * rhs(U2))


@dataclass
class ReferenceResult:
    centers: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    p: np.ndarray
    steps: int
    dt: float


def reference_explicit_solver(eos, mach: float, lower, upper, nel, init_fn: Callable, t_final: float,
                              dt: Optional[float] = None, cfl: float = 0.4, periodic=None,
                              froude: float = math.inf) -> ReferenceResult:
    """First-order finite volumes (cell averages, LLF flux) with SSP-RK3 in time.

    ``init_fn(*centers)`` returns ``(rho, u, p)`` with ``u`` of shape ``(dim, ...)``.
    Raises :class:`CFLViolation` when a prescribed ``dt`` exceeds the
    forward-Euler limit.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    nel = np.atleast_1d(np.asarray(nel, dtype=int))
    dim = len(lower)
    periodic = tuple(periodic) if periodic is not None else (False,) * dim
    dx = (upper - lower) / nel
    axes = [lower[k] + (np.arange(nel[k]) + 0.5) * dx[k] for k in range(dim)]
    X = np.meshgrid(*axes, indexing="ij")
    rho0, u0, p0 = init_fn(*X)
    u0 = np.asarray(u0, dtype=float).reshape((dim,) + rho0.shape)
    M2 = mach * mach
    g_inv = 0.0 if math.isinf(froude) else 1.0 / froude**2
    T_cache = [None]

    def primitives(U):
        rho = U[0]
        if np.any(~(rho > 0)):
            raise NonPhysicalState("non-positive density in reference solver")
        u = U[1:1 + dim] / rho
        e = U[1 + dim] / rho - 0.5 * M2 * np.sum(u * u, axis=0)
        T = None
        if isinstance(eos, eosmod.CubicEosParams):
            T = eosmod.temperature_from_rho_e(eos, rho, e, T_cache[0])
            T_cache[0] = T
            p = eosmod.pressure_from_rho_T(eos, rho, T)
        else:
            p = eosmod.pressure_from_rho_e(eos, rho, e)
        c = eosmod.sound_speed(eos, eosmod.ThermoState(rho=rho, p=p, T=T))
        return rho, u, p, c

    bc = [kernels.PERIODIC if per else kernels.WALL for per in periodic]

    def rhs(U):
        rho, u, p, c = primitives(U)
        if dim == 1:
            s = np.abs(u[0]) + c / mach
            R = kernels.llf_residual_1d(U[0], U[1], U[2], p, s, dx[0], M2, bc[0], bc[0])
        else:
            s = np.sqrt(np.sum(u * u, axis=0)) + c / mach
            R = kernels.llf_residual_2d(U[0], U[1], U[2], U[3], p, s, dx[0], dx[1], M2, bc[0], bc[1])
        if g_inv:
            R[dim] -= g_inv * U[0]
            R[1 + dim] -= M2 * g_inv * U[dim]
        return R

    def wave_rate(U):
        rho, u, p, c = primitives(U)
        return sum(float((np.abs(u[k]) + c / mach).max()) / dx[k] for k in range(dim))

    rhoE0 = rho0 * (eosmod.internal_energy(eos, p0, rho0) + 0.5 * M2 * np.sum(u0 * u0, axis=0))
    U = np.concatenate([rho0[None], (rho0 * u0), rhoE0[None]])
    t = 0.0
    steps = 0
    fixed = dt is not None
    while t < t_final * (1 - 1e-14):
        rate = wave_rate(U)
        if fixed:
            if dt * rate > 1.0:
                raise CFLViolation(f"dt = {dt:g} exceeds the stable limit {1.0 / rate:g}")
            step = min(dt, t_final - t)
        else:
            step = min(cfl / rate, t_final - t)
        U = _ssp_rk3(U, rhs, step)
        t += step
        steps += 1
    rho, u, p, _ = primitives(U)
    return ReferenceResult(np.stack(X), rho, u, p, steps, dt if fixed else t_final / steps)


def _conserved_stage(space: DgSpace, eos, phys: Physics, rho, m, rhoE, T_hint=None) -> tuple:
    """Point values and LLF speeds from conserved DG coefficients."""
    M2, M = phys.mach2, phys.mach

    def points(r, mm, E):
        if np.any(~(r > 0)):
            raise NonPhysicalState("non-positive density in explicit DG reference")
        u = mm / r
        kin = 0.5 * np.sum(u * u, axis=0)
        e = E / r - M2 * kin
        T = None
        if isinstance(eos, eosmod.CubicEosParams):
            T = eosmod.temperature_from_rho_e(eos, r, e)
            p = eosmod.pressure_from_rho_T(eos, r, T)
        else:
            p = eosmod.pressure_from_rho_e(eos, r, e)
        c = eosmod.sound_speed(eos, eosmod.ThermoState(rho=r, p=p, T=T))
        return Pointwise(r, u, p, e, kin, T, c)

    vol = points(space.eval(rho), space.eval(m), space.eval(rhoE))
    faces = []
    for g, L, R in space.interior:
        sL = points(space.trace(rho, L), space.trace(m, L), space.trace(rhoE, L))
        sR = points(space.trace(rho, R), space.trace(m, R), space.trace(rhoE, R))
        lam = np.maximum(np.sqrt(2 * sL.kin) + sL.c / M, np.sqrt(2 * sR.kin) + sR.c / M)
        faces.append((sL, sR, lam))
    bnd = []
    for g, ops in space.boundary:
        s = points(space.trace(rho, ops), space.trace(m, ops), space.trace(rhoE, ops))
        bnd.append((s, np.sqrt(2 * s.kin) + s.c / M))
    return StageData(FlowState(rho, None, None), vol, faces, bnd)


def explicit_dg_solver(space: DgSpace, eos, phys: Physics, state: FlowState, t_final: float,
                       dt: Optional[float] = None, cfl: float = 0.15, progress: Optional[Callable] = None):
    """Fully explicit DG (LLF flux, SSP-RK3) on the same space as the IMEX solver.

    Shares the face and volume residuals with the IMEX stages. Returns the
    final :class:`FlowState` and the number of steps.
    """
    M2 = phys.mach2
    dim = space.dim
    rho_q = space.eval(state.rho)
    u_q = space.eval(state.u)
    p_q = space.eval(state.p)
    e_q = eosmod.internal_energy(eos, p_q, rho_q)
    U = np.concatenate([
        state.rho[None],
        space.project_quad(rho_q[None] * u_q),
        space.project_quad(rho_q * (e_q + 0.5 * M2 * np.sum(u_q * u_q, axis=0)))[None],
    ])

    def rhs(U):
        rho, m, E = U[0], U[1:1 + dim], U[1 + dim]
        sd = _conserved_stage(space, eos, phys, rho, m, E)
        R = np.empty_like(U)
        R[0] = density_residual(space, sd)
        pv = sd.vol.p
        pf = [(sL.p, sR.p) for sL, sR, _ in sd.faces]
        pb = [s.p for s, _ in sd.bnd]
        R[1:1 + dim] = momentum_residual_explicit(space, sd, phys) + pressure_gradient_residual(space, pv, pf, pb) / M2
        hv = sd.vol.h * sd.vol.rho
        hf = [(sL.h * sL.rho, sR.h * sR.rho) for sL, sR, _ in sd.faces]
        uf = [(sL.u, sR.u) for sL, sR, _ in sd.faces]
        R[1 + dim] = energy_residual_explicit(space, sd, phys) + enthalpy_flux_residual(space, hv, sd.vol.u, hf, uf)
        return space.mass_solve(R)

    from .mesh import min_diameter

    H = min_diameter(space.mesh)
    r = space.degree
    t, steps = 0.0, 0
    while t < t_final * (1 - 1e-14):
        if dt is None:
            sd = _conserved_stage(space, eos, phys, U[0], U[1:1 + dim], U[1 + dim])
            smax = float((np.sqrt(2 * sd.vol.kin) + sd.vol.c / phys.mach).max())
            step = cfl * H / ((2 * r + 1) * smax)
        else:
            step = dt
        step = min(step, t_final - t)
        U = _ssp_rk3(U, rhs, step)
        t += step
        steps += 1
        if progress is not None:
            progress(steps, t)
    rho_q = space.eval(U[0])
    u_q = space.eval(U[1:1 + dim]) / rho_q
    e_q = space.eval(U[1 + dim]) / rho_q - 0.5 * M2 * np.sum(u_q * u_q, axis=0)
    p_q = eosmod.pressure_from_rho_e(eos, rho_q, e_q)
    return FlowState(U[0].copy(), space.project_quad(u_q), space.project_quad(p_q)), steps


# --------------------------------------------------------------------------
# initial conditions


def cold_bubble_fields(cfg: CaseConfig, eos):
    """Isentropic background with a cold potential-temperature anomaly.

    The Exner pressure uses the background potential temperature; the
    anomaly changes temperature and density, not pressure.
    """
    P = cfg.params
    theta0, A, r0, sigma = P.get("theta0", 303.0), P.get("A", -15.0), P.get("r0", 50.0), P.get("sigma", 100.0)
    x0, y0 = P.get("x0", 500.0), P.get("y0", 1250.0)
    rg, cp = P.get("Rg_ideal", 2.87e-3), P.get("cp_ideal", 1.0045e-2)
    M2, inv_fr2 = cfg.mach**2, 1.0 / cfg.froude**2

    def fn(x, y):
        r = np.sqrt((x - x0) ** 2 + (y - y0) ** 2)
        dth = np.where(r <= r0, A, A * np.exp(-((r - r0) ** 2) / sigma**2))
        Pi = 1.0 - M2 * inv_fr2 * y / (cp * theta0)
        T = (theta0 + dth) * Pi
        p = Pi ** (cp / rg)
        rho = p / (rg * T)
        return rho, np.zeros((2,) + np.shape(x)), p

    return fn


def warm_bubble_fields(cfg: CaseConfig, eos):
    """Truncated warm anomaly on an isothermal hydrostatic background.

    The anomaly formula keeps the positive exponent as printed.
    """
    P = cfg.params
    x0, y0, r0, sigma = P.get("x0", 0.5), P.get("y0", 0.35), P.get("r0", 0.25), P.get("sigma", 2.0)
    p0, rg_air = P.get("p0", 1e5), P.get("Rg_air", 287.0)
    T_bg, shift = P.get("T_background", 386.48), P.get("T_shift", 0.0)
    M2, inv_fr2 = cfg.mach**2, 1.0 / cfg.froude**2
    p_ref = P.get("p_ref", p0)

    def fn(x, y):
        r2 = (x - x0) ** 2 + (y - y0) ** 2
        T = np.where(r2 > r0 * r0, T_bg, p0 / (rg_air * (1.0 - 0.1 * np.exp(r2 / sigma**2))) + shift)
        # isothermal hydrostatic background from the bottom wall (y = lower)
        rho_bg = eosmod_density(eos, np.full_like(x, p_ref), np.full_like(x, T_bg))
        p = p_ref * np.exp(-M2 * inv_fr2 * (y - cfg.lower[1]) * rho_bg / p_ref)
        rho = eosmod_density(eos, p, T)
        return rho, np.zeros((2,) + np.shape(x)), p

    return fn


def eosmod_density(eos, p, T):
    """Density from pressure and temperature (bisection on the cubic branch near the ideal guess)."""
    p = np.asarray(p, dtype=float)
    T = np.asarray(T, dtype=float)
    if isinstance(eos, eosmod.IdealGasParams):
        return p / (eos.Rg * T)
    if isinstance(eos, eosmod.StiffenedGasParams):
        return (p + eos.pi) / (eos.Rg * T)
    rho = p / (eos.Rg * T)
    for _ in range(100):
        f = eosmod.pressure_from_rho_T(eos, rho, T) - p
        h = 1e-7 * rho
        df = (eosmod.pressure_from_rho_T(eos, rho + h, T) - eosmod.pressure_from_rho_T(eos, rho - h, T)) / (2 * h)
        step = f / df
        rho = rho - step
        if np.all(np.abs(step) <= 1e-13 * np.abs(rho)):
            break
    return rho


def initial_fields(cfg: CaseConfig, eos) -> Callable:
    """Point function ``(x[, y]) -> (rho, u, p)`` for a case."""
    name = cfg.case
    if name.startswith("vortex"):
        vp = vortex_params(cfg)
        return lambda x, y: vortex_exact(vp, x, y, 0.0)
    if name.startswith("sod"):
        st = RiemannState(*(cfg.params.get(k, d) for k, d in (("rho_l", 1.0), ("u_l", 0.0), ("p_l", 1.0),
                                                               ("rho_r", 0.125), ("u_r", 0.0), ("p_r", 0.1),
                                                               ("x_d", 0.0))))

        def sod(x):
            left = x < st.x_d
            return (np.where(left, st.rho_l, st.rho_r), np.where(left, st.u_l, st.u_r)[None],
                    np.where(left, st.p_l, st.p_r))

        return sod
    if name.startswith("cavity"):
        def cavity(x, y):
            return (np.ones_like(x), np.zeros((2,) + np.shape(x)), np.full_like(x, cfg.params.get("p0", 1.0)))

        return cavity
    if name.startswith("cold_bubble"):
        return cold_bubble_fields(cfg, eos)
    if name.startswith("warm_bubble"):
        return warm_bubble_fields(cfg, eos)
    if name == "constant":
        P = cfg.params

        def const(*X):
            shape = np.shape(X[0])
            u = np.stack([np.full(shape, P.get(f"u{k}", 0.3)) for k in range(len(X))])
            return np.full(shape, P.get("rho", 1.0)), u, np.full(shape, P.get("p", 1.0))

        return const
    raise ValueError(f"no initial condition for case {name!r}")


def vortex_params(cfg: CaseConfig) -> VortexParams:
    g = cfg.eos_params.get("gamma", 1.4)
    return VortexParams(beta=cfg.params.get("beta", 10.0), mach=cfg.mach, gamma=g,
                        lower=cfg.lower[0], upper=cfg.upper[0])


def initial_state(cfg: CaseConfig, space: DgSpace, eos) -> FlowState:
    """Initial condition on ``space``.

    Smooth data are interpolated at the nodes. Riemann problems are
    L2-projected instead: their jump sits on a face, where a nodal value
    would be ambiguous.
    """
    fn = initial_fields(cfg, eos)
    project = cfg.params.get("project_initial", 1.0 if cfg.case.startswith("sod") else 0.0)
    X = space.hi_points() if project else space.nodal_points
    rho, u, p = fn(*X)
    u = np.asarray(u, dtype=float).reshape((space.dim,) + X[0].shape)
    fields = [np.asarray(rho, dtype=float), u, np.asarray(p, dtype=float)]
    if project:
        fields = [space.project_values(f) for f in fields]
    return FlowState(*fields)


# --------------------------------------------------------------------------
# case library


def case_library() -> Dict[str, CaseConfig]:
    """Every benchmark with its printed constants."""
    lib: Dict[str, CaseConfig] = {}
    vortex = CaseConfig(case="vortex", eos="ideal", eos_params={"gamma": 1.4}, mach=0.1,
                        lower=(-10.0, -10.0), upper=(10.0, 10.0), nel=(10, 10), periodic=(True, True),
                        degree=1, courant=0.01, t_final=1.0, alpha=ALPHA_ORIGINAL, params={"beta": 10.0})
    lib["vortex"] = vortex
    lib["vortex_adaptive"] = vortex.replace(case="vortex_adaptive", alpha=0.5, courant=0.1,
                                            nel=(10, 10), indicator="density_gradient", refine=2e-3,
                                            coarsen=5e-4, min_diam=0.5, remesh_every=5)
    sod = CaseConfig(case="sod_ideal", eos="ideal", eos_params={"gamma": 1.4}, mach=1.0, lower=(-0.5,),
                     upper=(0.5,), nel=(500,), periodic=(False,), degree=0, dt=1e-4, t_final=0.2, alpha=0.5,
                     flux="llf", limiter_threshold=1e-6)
    lib["sod_ideal"] = sod
    lib["sod_vdw"] = sod.replace(case="sod_vdw", eos="vdw", eos_params={"a": 0.5, "b": 0.5, "cv": 2.5, "Rg": 1.0})
    lib["sod_pr"] = sod.replace(case="sod_pr", eos="pr", eos_params={"a": 0.5, "b": 0.5, "cv": 2.5, "Rg": 1.0})
    cavity = CaseConfig(case="cavity", eos="ideal", eos_params={"gamma": 1.4}, mach=math.sqrt(1e-5),
                        reynolds=100.0, prandtl=0.71, lower=(0.0, 0.0), upper=(1.0, 1.0), nel=(32, 32),
                        periodic=(False, False), boundary_tags={(1, 1): "lid"}, lid_velocity=(1.0, 0.0),
                        degree=1, courant=49.0, t_final=40.0, alpha=0.5, params={"p0": 1.0})
    lib["cavity"] = cavity
    lib["cavity_r2"] = cavity.replace(case="cavity_r2", degree=2)
    lib["cavity_adaptive"] = cavity.replace(case="cavity_adaptive", nel=(16, 16), indicator="vorticity",
                                            marking="fraction", refine=0.05, coarsen=0.30,
                                            min_diam=1.0 / 64.0, max_diam=1.0 / 16.0)
    cold = CaseConfig(case="cold_bubble", eos="ideal", eos_params={"gamma": 1.4, "Rg": 2.87e-3},
                      mach=math.sqrt(1e-5), froude=1.0 / math.sqrt(9.81), lower=(0.0, 0.0),
                      upper=(1000.0, 2000.0), nel=(200, 400), periodic=(False, False), degree=1, dt=0.08,
                      t_final=50.0, alpha=0.5,
                      params={"theta0": 303.0, "A": -15.0, "r0": 50.0, "sigma": 100.0, "x0": 500.0,
                              "y0": 1250.0, "Rg_ideal": 2.87e-3, "cp_ideal": 1.0045e-2})
    lib["cold_bubble"] = cold
    lib["cold_bubble_scaled"] = cold.replace(case="cold_bubble_scaled", nel=(25, 50), dt=0.64)
    lib["cold_bubble_adaptive"] = cold.replace(case="cold_bubble_adaptive", nel=(50, 100),
                                               indicator="theta_gradient", refine=1e-1, coarsen=6e-2,
                                               min_diam=5.0)
    vdw_z1 = {"a": 5e-9, "b": 5e-4, "cv": 7.175e-3, "Rg": 2.87e-3}
    vdw = {"a": 1.6e-1, "b": 5e-4, "cv": 7.175e-3, "Rg": 2.87e-3}
    lib["cold_bubble_vdw_z1"] = cold.replace(case="cold_bubble_vdw_z1", eos="vdw", eos_params=dict(vdw_z1))
    lib["cold_bubble_vdw"] = cold.replace(case="cold_bubble_vdw", eos="vdw", eos_params=dict(vdw))
    lib["cold_bubble_vdw_adaptive"] = cold.replace(case="cold_bubble_vdw_adaptive", eos="vdw",
                                                   eos_params=dict(vdw), nel=(50, 100), dt=0.02,
                                                   indicator="beta_gradient", refine=4e-4, coarsen=2e-4,
                                                   min_diam=1.25)
    lib["cold_bubble_pr_z1"] = cold.replace(case="cold_bubble_pr_z1", eos="pr", eos_params=dict(vdw_z1))
    lib["cold_bubble_pr"] = cold.replace(case="cold_bubble_pr", eos="pr", eos_params=dict(vdw))
    lib["cold_bubble_pr_adaptive"] = lib["cold_bubble_vdw_adaptive"].replace(
        case="cold_bubble_pr_adaptive", eos="pr", eos_params=dict(vdw))
    lib["cold_bubble_pr_adaptive_gamma"] = lib["cold_bubble_pr_adaptive"].replace(
        case="cold_bubble_pr_adaptive_gamma", indicator="gamma_prho_gradient")
    warm = CaseConfig(case="warm_bubble", eos="ideal", eos_params={"gamma": 1.4, "Rg": 287.0}, mach=0.01,
                      froude=0.004, reynolds=804.9, prandtl=0.71, lower=(-0.5, -0.5), upper=(1.5, 1.5),
                      nel=(120, 120), periodic=(True, False), degree=1, courant=118.0, t_final=20.0,
                      alpha=0.5, params={"x0": 0.5, "y0": 0.35, "r0": 0.25, "sigma": 2.0, "p0": 1e5,
                                         "Rg_air": 287.0, "T_background": 386.48})
    lib["warm_bubble"] = warm
    lib["warm_bubble_n2o"] = warm.replace(case="warm_bubble_n2o", eos="n2o", eos_params={}, reynolds=716.1,
                                          prandtl=0.73, courant=92.0)
    lib["warm_bubble_n2o_ideal"] = warm.replace(case="warm_bubble_n2o_ideal",
                                                eos_params={"gamma": 1.2879, "Rg": 188.91},
                                                reynolds=716.1, prandtl=0.73, courant=92.0)
    sat = dict(warm.params, p_ref=4e6, T_background=298.0, T_shift=-88.48)
    lib["warm_bubble_n2o_sat"] = warm.replace(case="warm_bubble_n2o_sat", eos="n2o", eos_params={},
                                              reynolds=810.7, prandtl=1.19, courant=74.5, params=sat)
    lib["warm_bubble_n2o_sat_sg"] = warm.replace(case="warm_bubble_n2o_sat_sg", eos="sg",
                                                 eos_params={"gamma": 1.0936, "cv": 1453.91, "pi": 0.0, "q": 0.0},
                                                 reynolds=810.7, prandtl=1.19, courant=67.0, params=dict(sat))
    lib["constant"] = CaseConfig(case="constant", lower=(0.0, 0.0), upper=(1.0, 1.0), nel=(4, 4),
                                 periodic=(True, True), mach=0.1, dt=0.01, t_final=0.05)
    for cfg in lib.values():
        cfg.validate()
    return lib


def make_eos(cfg: CaseConfig):
    return eosmod.eos_from_config(cfg.eos, **cfg.eos_params)


def make_physics(cfg: CaseConfig) -> Physics:
    return Physics(mach=cfg.mach, froude=cfg.froude, reynolds=cfg.reynolds, prandtl=cfg.prandtl,
                   heat_coefficient=cfg.heat_coefficient)


def flux_mode(cfg: CaseConfig) -> FluxMode:
    return FluxMode.LocalLaxFriedrichs if cfg.flux == "llf" else FluxMode.Upwind
