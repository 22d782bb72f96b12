"""One IMEX step of the inviscid part (advection, pressure, gravity).

Density is advanced explicitly. Momentum and energy couple through the
pressure, treated implicitly: after eliminating velocity the pressure solves
the Schur system ``(D - C A^-1 B) P = G - C A^-1 F`` inside a fixed-point
loop that lags the enthalpy and kinetic energy.

Face convention: for an interior face the unit normal ``n`` points from the
left cell L to the right cell R and ``[[w]] . n = w_L - w_R``. Wall faces
use a mirror ghost state (normal velocity reversed, scalars copied).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import eos as eosmod
from .dg import DgSpace
from .errors import NonPhysicalState, NoConvergence
from .imex import ImexTableau
from .linsolve import block_jacobi, gmres


class FluxMode(enum.Enum):
    Upwind = "upwind"
    LocalLaxFriedrichs = "llf"


@dataclass
class Physics:
    """Non-dimensional numbers. ``froude = inf`` disables gravity, ``reynolds = inf`` viscosity."""

    mach: float
    froude: float = math.inf
    reynolds: float = math.inf
    prandtl: float = 0.71
    heat_coefficient: Optional[float] = None

    @property
    def mach2(self) -> float:
        return self.mach**2

    @property
    def inv_fr2(self) -> float:
        return 0.0 if math.isinf(self.froude) else 1.0 / self.froude**2

    @property
    def inv_re(self) -> float:
        return 0.0 if math.isinf(self.reynolds) else 1.0 / self.reynolds

    @property
    def kappa(self) -> float:
        """Coefficient of the temperature Laplacian in the energy equation."""
        if self.heat_coefficient is not None:
            return self.heat_coefficient
        return 0.0 if math.isinf(self.reynolds) else 1.0 / (self.prandtl * self.reynolds)

    @property
    def viscous(self) -> bool:
        return self.inv_re > 0.0 or self.kappa > 0.0


@dataclass
class HyperbolicConfig:
    flux: FluxMode = FluxMode.Upwind
    limiter_threshold: Optional[float] = None
    fp_max_iter: int = 3
    fp_tol: float = 1e-10
    fp_ceiling: float = math.inf
    gmres_tol: float = 1e-10
    gmres_restart: int = 60
    gmres_maxit: int = 3000
    duplicate_a31_term: bool = False


@dataclass
class FlowState:
    """DG coefficients of density, velocity and pressure."""

    rho: np.ndarray
    u: np.ndarray
    p: np.ndarray

    def copy(self) -> "FlowState":
        return FlowState(self.rho.copy(), self.u.copy(), self.p.copy())


@dataclass
class StepInfo:
    fp_iterations: List[int] = field(default_factory=list)
    fp_residuals: List[float] = field(default_factory=list)
    gmres_iterations: List[int] = field(default_factory=list)
    limited_cells: int = 0


# --------------------------------------------------------------------------
# point evaluations


@dataclass
class Pointwise:
    rho: np.ndarray
    u: np.ndarray
    p: np.ndarray
    e: np.ndarray
    kin: np.ndarray
    T: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None

    @property
    def h(self):
        return self.e + self.p / self.rho

    def rhoE(self, mach2):
        return self.rho * (self.e + mach2 * self.kin)


def _temperature(eos, p, rho, hint=None):
    if isinstance(eos, eosmod.CubicEosParams):
        return eosmod.temperature_from_p_rho(eos, p, rho, hint)
    return None


def pointwise(eos, rho, u, p, need_c=False, T_hint=None) -> Pointwise:
    if np.any(~(rho > 0)):
        raise NonPhysicalState("non-positive density at a quadrature point")
    T = _temperature(eos, p, rho, T_hint)
    e = eosmod.internal_energy(eos, p, rho, T)
    kin = 0.5 * np.sum(u * u, axis=0)
    c = eosmod.sound_speed(eos, eosmod.ThermoState(rho=rho, p=p, T=T)) if need_c else None
    return Pointwise(rho, u, p, e, kin, T, c)


@dataclass
class StageData:
    state: FlowState
    vol: Pointwise
    faces: list  # per interior group: (Pointwise L, Pointwise R, lam)
    bnd: list  # per boundary group: (Pointwise, lam)


def evaluate_stage(space: DgSpace, eos, phys: Physics, state: FlowState, flux: FluxMode) -> StageData:
    need_c = flux is FluxMode.LocalLaxFriedrichs
    M = phys.mach
    vol = pointwise(eos, space.eval(state.rho), space.eval(state.u), space.eval(state.p))
    faces = []
    for g, L, R in space.interior:
        sL = pointwise(eos, space.trace(state.rho, L), space.trace(state.u, L), space.trace(state.p, L), need_c)
        sR = pointwise(eos, space.trace(state.rho, R), space.trace(state.u, R), space.trace(state.p, R), need_c)
        if need_c:
            lam = np.maximum(np.sqrt(2 * sL.kin) + sL.c / M, np.sqrt(2 * sR.kin) + sR.c / M)
        else:
            lam = np.maximum(np.abs(sL.u[g.dir]), np.abs(sR.u[g.dir]))
        faces.append((sL, sR, lam))
    bnd = []
    for g, ops in space.boundary:
        s = pointwise(eos, space.trace(state.rho, ops), space.trace(state.u, ops), space.trace(state.p, ops), need_c)
        lam = np.sqrt(2 * s.kin) + s.c / M if need_c else np.abs(s.u[g.dir])
        bnd.append((s, lam))
    return StageData(state, vol, faces, bnd)


def _gravity_axis(space: DgSpace) -> int:
    return space.dim - 1


# --------------------------------------------------------------------------
# explicit residuals of one prior stage


def density_residual(space: DgSpace, sd: StageData) -> np.ndarray:
    """``int rho u . grad w - sum_faces int (flux) [[w]]`` for stage data ``sd``."""
    v = sd.vol
    out = space.integrate_grad(v.rho * v.u)
    for (g, L, R), (sL, sR, lam) in zip(space.interior, sd.faces):
        d = g.dir
        fl = 0.5 * (sL.rho * sL.u[d] + sR.rho * sR.u[d]) + 0.5 * lam * (sL.rho - sR.rho)
        fw = fl * space.face_weights(g)
        space.scatter(out, fw, L, -1.0)
        space.scatter(out, fw, R, +1.0)
    # walls: mass flux vanishes for the mirror state
    return out


def momentum_residual_explicit(space: DgSpace, sd: StageData, phys: Physics) -> np.ndarray:
    """Advection, upwind dissipation and gravity parts (weighted by the explicit tableau)."""
    v = sd.vol
    dim = space.dim
    mom = v.rho * v.u
    out = np.zeros((dim,) + sd.state.rho.shape)
    for i in range(dim):
        out[i] = space.integrate_grad(mom[i][None] * v.u)
    if phys.inv_fr2:
        out[_gravity_axis(space)] -= phys.inv_fr2 * space.integrate(v.rho)
    for (g, L, R), (sL, sR, lam) in zip(space.interior, sd.faces):
        d = g.dir
        fw = space.face_weights(g)
        mL = sL.rho * sL.u
        mR = sR.rho * sR.u
        fl = 0.5 * (mL * sL.u[d] + mR * sR.u[d]) + 0.5 * lam * (mL - mR)
        space.scatter(out, fl * fw, L, -1.0)
        space.scatter(out, fl * fw, R, +1.0)
    for (g, ops), (s, lam) in zip(space.boundary, sd.bnd):
        if g.tag == "periodic":
            continue
        d = g.dir
        un = s.u[d] * g.normal_sign
        val = (s.rho * un * un + lam * s.rho * un) * g.normal_sign
        fw = space.face_weights(g)
        tmp = np.zeros((dim,) + val.shape)
        tmp[d] = val * fw
        space.scatter(out, tmp, ops, -1.0)
    return out


def pressure_gradient_residual(space: DgSpace, p_vol: np.ndarray, p_faces, p_bnd) -> np.ndarray:
    """``int p div v - sum_faces int {{p}} [[v]]`` given p at volume/face points."""
    dim = space.dim
    out = np.zeros((dim, space.n_cells, space.ndofs))
    wJ = space.quad_weights
    for k in range(dim):
        out[k] = ((p_vol * wJ) / space.h[:, k, None]) @ space.ref.G[k]
    for (g, L, R), (pL, pR) in zip(space.interior, p_faces):
        val = 0.5 * (pL + pR) * space.face_weights(g)
        d = g.dir
        space.scatter(out[d], val, L, -1.0)
        space.scatter(out[d], val, R, +1.0)
    for (g, ops), pb in zip(space.boundary, p_bnd):
        if g.tag == "periodic":
            continue
        val = pb * g.normal_sign * space.face_weights(g)
        space.scatter(out[g.dir], val, ops, -1.0)
    return out


def energy_residual_explicit(space: DgSpace, sd: StageData, phys: Physics, lam_factor: float = 1.0) -> np.ndarray:
    v = sd.vol
    M2 = phys.mach2
    out = M2 * space.integrate_grad(v.kin * v.rho * v.u)
    if phys.inv_fr2:
        out -= M2 * phys.inv_fr2 * space.integrate(v.rho * v.u[_gravity_axis(space)])
    for (g, L, R), (sL, sR, lam) in zip(space.interior, sd.faces):
        d = g.dir
        fl = 0.5 * M2 * (sL.kin * sL.rho * sL.u[d] + sR.kin * sR.rho * sR.u[d])
        fl = fl + lam_factor * 0.5 * lam * (sL.rhoE(M2) - sR.rhoE(M2))
        fw = fl * space.face_weights(g)
        space.scatter(out, fw, L, -1.0)
        space.scatter(out, fw, R, +1.0)
    return out


def enthalpy_flux_residual(space: DgSpace, hrho_vol, u_vol, hrho_faces, u_faces) -> np.ndarray:
    """``int h rho u . grad w - sum_interior int {{h rho u}} . n [[w]]`` (zero on walls)."""
    out = space.integrate_grad(hrho_vol[None] * u_vol)
    for (g, L, R), (hL, hR), (uL, uR) in zip(space.interior, hrho_faces, u_faces):
        d = g.dir
        fl = 0.5 * (hL * uL[d] + hR * uR[d]) * space.face_weights(g)
        space.scatter(out, fl, L, -1.0)
        space.scatter(out, fl, R, +1.0)
    return out


# --------------------------------------------------------------------------
# limiter


def density_jump_indicator(space: DgSpace, rho: np.ndarray) -> np.ndarray:
    """``eta_K = sum over faces of ||rho+ - rho-||^2`` (walls contribute nothing)."""
    eta = np.zeros(space.n_cells)
    for g, L, R in space.interior:
        jump2 = ((space.trace(rho, L) - space.trace(rho, R)) ** 2 * space.face_weights(g)).sum(axis=1)
        np.add.at(eta, L.cells, jump2)
        np.add.at(eta, R.cells, jump2)
    return eta


def limiter_q0_density(space: DgSpace, rho: np.ndarray, threshold: float = 1e-6):
    """Replace the density by its cell mean where the jump indicator exceeds ``threshold``.

    Returns the limited coefficients and the boolean flag array.
    """
    eta = density_jump_indicator(space, rho)
    flag = eta > threshold
    out = rho.copy()
    if flag.any():
        means = space.cell_means(rho[flag])
        out[flag] = means[:, None]
    return out, flag


# --------------------------------------------------------------------------
# the step


class HyperbolicSolver:
    """IMEX stepper for the inviscid subsystem on a fixed :class:`DgSpace`."""

    def __init__(self, space: DgSpace, eos, phys: Physics, tableau: ImexTableau, config: HyperbolicConfig = None):
        self.space = space
        self.eos = eos
        self.phys = phys
        self.tab = tableau
        self.cfg = config or HyperbolicConfig()

    # -- operators -------------------------------------------------------
    def _p_points(self, P):
        sp = self.space
        return (sp.eval(P), [(sp.trace(P, L), sp.trace(P, R)) for _, L, R in sp.interior],
                [sp.trace(P, ops) for _, ops in sp.boundary])

    def apply_B(self, P, coef):
        """Momentum-test image of a pressure field, ``coef = a_ss dt / M^2``."""
        return -coef * pressure_gradient_residual(self.space, *self._p_points(P))

    def apply_C(self, U, hrho, coef):
        """Energy-test image of a velocity field, ``coef = a_ss dt``; ``hrho`` holds h rho at points."""
        sp = self.space
        hv, hf = hrho
        u_vol = sp.eval(U)
        u_faces = [(sp.trace(U, L), sp.trace(U, R)) for _, L, R in sp.interior]
        return -coef * enthalpy_flux_residual(sp, hv, u_vol, hf, u_faces)

    # -- stage pieces ----------------------------------------------------
    def explicit_density(self, s: int, stages: List[StageData], rho_n: np.ndarray, dt: float) -> np.ndarray:
        sp = self.space
        rhs = 0.0
        for m in range(s):
            a = self.tab.a[s, m]
            if a:
                rhs = rhs + a * density_residual(sp, stages[m])
        rho = rho_n + dt * sp.mass_solve(rhs) if not np.isscalar(rhs) else rho_n.copy()
        return rho

    def _energy_coefficients(self, rho_q, p_q, T_hint=None):
        """Pointwise ``(d, offset)`` with ``rho e = d p + offset`` at fixed temperature."""
        eos = self.eos
        if isinstance(eos, eosmod.IdealGasParams):
            return np.full_like(p_q, 1.0 / (eos.gamma - 1.0)), np.zeros_like(p_q), None
        if isinstance(eos, eosmod.StiffenedGasParams):
            g1 = eos.gamma - 1.0
            return np.full_like(p_q, 1.0 / g1), eos.gamma * eos.pi / g1 + rho_q * eos.q, None
        T = eosmod.temperature_from_p_rho(eos, p_q, rho_q, T_hint)
        cv = eos.cv_fn(T)
        one_b = 1.0 - rho_q * eos.b
        Q = eosmod._Q(eos, rho_q)
        dcoef = cv / eos.Rg * one_b
        a, da = eos.a_fn(T), eos.da_dT_fn(T)
        offset = dcoef * a * rho_q**2 / Q + rho_q * (a - T * da) * eosmod.U_over_b(eos, rho_q)
        return dcoef, offset, T

    def stage(self, s: int, stages: List[StageData], dt: float, info: StepInfo) -> FlowState:
        sp, tab, phys, cfg = self.space, self.tab, self.phys, self.cfg
        M2 = phys.mach2
        first = stages[0]
        prev = stages[s - 1]

        rho_s = self.explicit_density(s, stages, first.state.rho, dt)
        if cfg.limiter_threshold is not None:
            rho_s, flag = limiter_q0_density(sp, rho_s, cfg.limiter_threshold)
            info.limited_cells += int(flag.sum())
        rho_q = sp.eval(rho_s)
        if np.any(~(rho_q > 0)):
            raise NonPhysicalState("density became non-positive")

        # momentum right-hand side F
        v1 = first.vol
        F = sp.integrate(v1.rho * v1.u)
        G = sp.integrate(v1.rhoE(M2))
        for m in range(s):
            a, at = tab.a[s, m], tab.a_tilde[s, m]
            sd = stages[m]
            if a:
                F += a * dt * momentum_residual_explicit(sp, sd, phys)
                lam_factor = 2.0 if (cfg.duplicate_a31_term and s == 2 and m == 0) else 1.0
                G += a * dt * energy_residual_explicit(sp, sd, phys, lam_factor)
            if at:
                pv, pf, pb = self._p_points(sd.state.p)
                F += at * dt / M2 * pressure_gradient_residual(sp, pv, pf, pb)
                hv = sd.vol.h * sd.vol.rho
                hf = [(sL.h * sL.rho, sR.h * sR.rho) for sL, sR, _ in sd.faces]
                uf = [(sL.u, sR.u) for sL, sR, _ in sd.faces]
                G += at * dt * enthalpy_flux_residual(sp, hv, sd.vol.u, hf, uf)

        a_ss = tab.a_tilde[s, s]
        cB = a_ss * dt / M2
        cC = a_ss * dt

        A_blocks = sp.weighted_mass_blocks(rho_q)
        A_inv = np.linalg.inv(A_blocks)

        def Ainv(X):
            return np.einsum("cij,...cj->...ci", A_inv, X)

        rho_faces = [(sp.trace(rho_s, L), sp.trace(rho_s, R)) for _, L, R in sp.interior]
        P = prev.state.p.copy()
        kin_q = prev.vol.kin
        T_hint = prev.vol.T
        shape = P.shape
        AinvF = Ainv(F)
        U = prev.state.u.copy()
        n_iter = 0
        incr = math.inf
        for it in range(cfg.fp_max_iter):
            pv, pf, _ = self._p_points(P)
            dcoef, offset, T_hint = self._energy_coefficients(rho_q, pv, T_hint)
            e_vol = eosmod.internal_energy(self.eos, pv, rho_q, T_hint)
            hrho_vol = rho_q * e_vol + pv
            hrho_faces = []
            for (rL, rR), (pL, pR) in zip(rho_faces, pf):
                hrho_faces.append((rL * eosmod.internal_energy(self.eos, pL, rL) + pL,
                                   rR * eosmod.internal_energy(self.eos, pR, rR) + pR))
            hrho = (hrho_vol, hrho_faces)
            D_blocks = sp.weighted_mass_blocks(dcoef)
            rhs = G - sp.integrate(offset) - M2 * sp.integrate(rho_q * kin_q) - self.apply_C(AinvF, hrho, cC)

            def schur(x):
                X = x.reshape(shape)
                SX = np.einsum("cij,cj->ci", D_blocks, X) - self.apply_C(Ainv(self.apply_B(X, cB)), hrho, cC)
                return SX.reshape(-1)

            prec = block_jacobi(D_blocks, shape)
            x, rep = gmres(schur, rhs.reshape(-1), tol=cfg.gmres_tol, maxit=cfg.gmres_maxit,
                           restart=cfg.gmres_restart, precond=prec, x0=P.reshape(-1))
            info.gmres_iterations.append(rep.iterations)
            P_new = x.reshape(shape)
            U = Ainv(F - self.apply_B(P_new, cB))
            kin_q = 0.5 * np.sum(sp.eval(U) ** 2, axis=0)
            nrm = np.linalg.norm(P)
            incr = np.linalg.norm(P_new - P) / (nrm if nrm > 0 else 1.0)
            P = P_new
            n_iter = it + 1
            if incr < cfg.fp_tol:
                break
        if incr > cfg.fp_ceiling:
            raise NoConvergence(f"pressure fixed point: increment {incr:.3e} after {n_iter} iterations")
        info.fp_iterations.append(n_iter)
        info.fp_residuals.append(float(incr))
        return FlowState(rho_s, U, P)

    def step(self, state: FlowState, dt: float, info: Optional[StepInfo] = None):
        """Advance ``state`` by ``dt``; the third stage is the new solution."""
        info = info if info is not None else StepInfo()
        flux = self.cfg.flux
        stages = [evaluate_stage(self.space, self.eos, self.phys, state, flux)]
        for s in range(1, self.tab.stages):
            new = self.stage(s, stages, dt, info)
            if s < self.tab.stages - 1:
                stages.append(evaluate_stage(self.space, self.eos, self.phys, new, flux))
        return new, info


# --------------------------------------------------------------------------
# diagnostics


def total_mass(space: DgSpace, rho: np.ndarray) -> float:
    return float((space.eval(rho) * space.quad_weights).sum())


def courant_from_state(space: DgSpace, eos, phys: Physics, state: FlowState, dt: float):
    from .imex import courant_numbers
    from .mesh import min_diameter

    v = pointwise(eos, space.eval(state.rho), space.eval(state.u), space.eval(state.p), need_c=True)
    return courant_numbers(float(v.c.max()), float(np.sqrt(2 * v.kin).max()), min_diameter(space.mesh), dt,
                           space.degree, phys.mach)
