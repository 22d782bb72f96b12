"""Split viscous and heat-conduction stages discretized with symmetric interior penalty.

The stage values follow the implicit tableau. Momentum is solved first; the
energy equation is then solved with temperature as the unknown, with the
frictional heating evaluated from the new velocity. Density is frozen.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import eos as eosmod
from .dg import DgSpace
from .errors import NoConvergence, NonPhysicalState
from .hyperbolic import FlowState, Physics
from .imex import ImexTableau
from .linsolve import block_jacobi, cg


def tau_from_grad(Gr: np.ndarray) -> np.ndarray:
    """Deviatoric-style stress ``(grad u + grad u^T) - 2/3 div u I`` from ``Gr[k, c] = d u_c / d x_k``."""
    dim = Gr.shape[0]
    out = Gr + np.swapaxes(Gr, 0, 1)
    tr = sum(Gr[m, m] for m in range(dim))
    for m in range(dim):
        out[m, m] = out[m, m] - (2.0 / 3.0) * tr
    return out


@dataclass
class ViscousStageWork:
    m_rhs: np.ndarray
    e_rhs: np.ndarray
    rho_frozen: np.ndarray


@dataclass
class ViscousInfo:
    cg_iterations: List[int] = field(default_factory=list)
    temperature_iterations: List[int] = field(default_factory=list)


class SipOperator:
    """SIP discretization of ``-div flux(grad v)`` for vectors (stress) or scalars (Laplacian).

    ``dirichlet`` maps boundary tags to prescribed values; other boundaries
    are natural (zero flux). Periodic boundaries appear as interior faces.
    """

    def __init__(self, space: DgSpace, kind: str, dirichlet: Optional[Dict[str, np.ndarray]] = None,
                 penalty_scale: float = 1.0):
        if kind not in ("stress", "laplace"):
            raise ValueError(kind)
        self.space = space
        self.kind = kind
        self.dirichlet = dict(dirichlet or {})
        r1 = (space.degree + 1) ** 2 * penalty_scale
        h = space.h
        self._eta_int = [r1 * 0.5 * (1.0 / h[g.cellL, g.dir] + 1.0 / h[g.cellR, g.dir])[:, None]
                         for g, _, _ in space.interior]
        self._eta_bnd = [r1 / h[g.cells, g.dir][:, None] for g, _ in space.boundary]

    @property
    def ncomp(self) -> int:
        return self.space.dim if self.kind == "stress" else 1

    def _flux(self, Gr):
        return tau_from_grad(Gr) if self.kind == "stress" else Gr

    def _as_comp(self, U):
        return U if self.kind == "stress" else U[None]

    def _from_comp(self, out):
        return out if self.kind == "stress" else out[0]

    def _jump_flux(self, J, d, sign=1.0):
        """Flux of the tensor ``J (x) (sign e_d)`` as a gradient-tested value ``(dim, ncomp, ...)``."""
        dim = self.space.dim
        Gt = np.zeros((dim,) + J.shape)
        Gt[d] = sign * J
        return self._flux(Gt)

    def _bc_value(self, g, pts):
        val = self.dirichlet[g.tag]
        if callable(val):
            return np.asarray(val(*pts), dtype=float).reshape((self.ncomp,) + pts[0].shape)
        val = np.asarray(val, dtype=float).reshape(self.ncomp, 1, 1)
        return np.broadcast_to(val, (self.ncomp,) + pts[0].shape)

    def apply(self, U: np.ndarray) -> np.ndarray:
        """Homogeneous bilinear form ``a0(U, .)``."""
        sp = self.space
        Uc = self._as_comp(U)
        out = np.zeros_like(Uc)
        Gr = sp.grad(Uc)
        fl = self._flux(Gr)
        for c in range(self.ncomp):
            out[c] += sp.integrate_grad(fl[:, c])
        for (g, L, R), eta in zip(sp.interior, self._eta_int):
            d = g.dir
            fw = sp.face_weights(g)
            J = sp.trace(Uc, L) - sp.trace(Uc, R)
            avg = 0.5 * (self._flux(sp.grad_trace(Uc, L))[d] + self._flux(sp.grad_trace(Uc, R))[d])
            val = (eta * J - avg) * fw
            sp.scatter(out, val, L, +1.0)
            sp.scatter(out, val, R, -1.0)
            jf = 0.5 * self._jump_flux(J * fw, d)
            sp.scatter_grad(out, jf, L, -1.0)
            sp.scatter_grad(out, jf, R, -1.0)
        for (g, ops), eta in zip(sp.boundary, self._eta_bnd):
            if g.tag not in self.dirichlet:
                continue
            d, s = g.dir, g.normal_sign
            fw = sp.face_weights(g)
            u = sp.trace(Uc, ops)
            fn = s * self._flux(sp.grad_trace(Uc, ops))[d]
            sp.scatter(out, (eta * u - fn) * fw, ops, +1.0)
            sp.scatter_grad(out, self._jump_flux(u * fw, d, s), ops, -1.0)
        return self._from_comp(out)

    def lift(self) -> np.ndarray:
        """Boundary-data functional ``l_g`` with ``a(u, v) = a0(u, v) - l_g(v)``."""
        sp = self.space
        out = np.zeros((self.ncomp, sp.n_cells, sp.ndofs))
        for (g, ops), eta in zip(sp.boundary, self._eta_bnd):
            if g.tag not in self.dirichlet:
                continue
            d, s = g.dir, g.normal_sign
            fw = sp.face_weights(g)
            gv = self._bc_value(g, sp.face_quad_points(g, ops))
            sp.scatter(out, eta * gv * fw, ops, +1.0)
            sp.scatter_grad(out, self._jump_flux(gv * fw, d, s), ops, -1.0)
        return self._from_comp(out)

    def cell_blocks(self) -> np.ndarray:
        """Cell-diagonal blocks ``(ncomp, n_cells, k, k)`` of ``a0`` (components decoupled)."""
        sp = self.space
        ref = sp.ref
        dim = sp.dim
        nd = sp.ndofs
        blocks = np.zeros((self.ncomp, sp.n_cells, nd, nd))
        wJ = sp.quad_weights
        for c in range(self.ncomp):
            for k in range(dim):
                fac = 1.0 + (1.0 / 3.0 if (self.kind == "stress" and k == c) else 0.0)
                Gk = ref.G[k]
                blocks[c] += fac * np.einsum("qi,cq,qj->cij", Gk, wJ / sp.h[:, k, None] ** 2, Gk, optimize=True)

        def add_face(c, ops, d, w, eta, scale):
            fac = 1.0 + (1.0 / 3.0 if (self.kind == "stress" and d == c) else 0.0)
            T = ops.T
            dn = ops.G[d][None] / sp.h[ops.cells, d][:, None, None]  # (nf, nfq, nd)
            Tn = np.broadcast_to(T, dn.shape)
            sym = np.einsum("fq,fqi,fqj->fij", w, dn, Tn)
            loc = -scale * fac * (sym + np.swapaxes(sym, 1, 2)) + np.einsum("fq,qi,qj->fij", eta * w, T, T)
            np.add.at(blocks[c], ops.cells, loc)

        for c in range(self.ncomp):
            for (g, L, R), eta in zip(sp.interior, self._eta_int):
                w = sp.face_weights(g)
                add_face(c, L, g.dir, w, eta, 0.5)
                add_face(c, R, g.dir, -w, -eta, 0.5)
            for (g, ops), eta in zip(sp.boundary, self._eta_bnd):
                if g.tag in self.dirichlet:
                    add_face(c, ops, g.dir, g.normal_sign * sp.face_weights(g), g.normal_sign * eta, 1.0)
        return blocks


class ViscousSolver:
    """Implicit-tableau stages for the viscous and heat-conduction terms."""

    def __init__(self, space: DgSpace, eos, phys: Physics, tableau: ImexTableau,
                 wall_velocity: Optional[Dict[str, np.ndarray]] = None, cg_tol: float = 1e-12,
                 temperature_tol: float = 1e-10, temperature_max_iter: int = 50):
        self.space = space
        self.eos = eos
        self.phys = phys
        self.tab = tableau
        dim = space.dim
        tags = {g.tag for g, _ in space.boundary}
        bc = {t: np.zeros(dim) for t in tags}
        bc.update({k: np.asarray(v, dtype=float) for k, v in (wall_velocity or {}).items()})
        self.wall_velocity = bc
        self.stress = SipOperator(space, "stress", bc)
        self.heat = SipOperator(space, "laplace", None)
        self._stress_lift = self.stress.lift()
        self._stress_blocks = self.stress.cell_blocks()
        self._heat_blocks = self.heat.cell_blocks()[0]
        self.cg_tol = cg_tol
        self.temperature_tol = temperature_tol
        self.temperature_max_iter = temperature_max_iter

    # -- pieces ----------------------------------------------------------
    def stress_form(self, U):
        """``a(U, .)`` including the boundary data."""
        return self.stress.apply(U) - self._stress_lift

    def friction_form(self, U):
        """Weak form of ``div(tau(u) u)`` tested with scalars."""
        sp = self.space
        tau = tau_from_grad(sp.grad(U))
        u = sp.eval(U)
        F = np.einsum("kc...,c...->k...", tau, u)
        out = -sp.integrate_grad(F)
        for g, L, R in sp.interior:
            d = g.dir
            tL = tau_from_grad(sp.grad_trace(U, L))
            tR = tau_from_grad(sp.grad_trace(U, R))
            fL = np.einsum("c...,c...->...", tL[d], sp.trace(U, L))
            fR = np.einsum("c...,c...->...", tR[d], sp.trace(U, R))
            val = 0.5 * (fL + fR) * sp.face_weights(g)
            sp.scatter(out, val, L, +1.0)
            sp.scatter(out, val, R, -1.0)
        for g, ops in sp.boundary:
            if g.tag not in self.wall_velocity:
                continue
            gv = self.stress._bc_value(g, sp.face_quad_points(g, ops))
            if not np.any(gv):
                continue
            t = tau_from_grad(sp.grad_trace(U, ops))
            val = g.normal_sign * np.einsum("c...,c...->...", t[g.dir], gv) * sp.face_weights(g)
            sp.scatter(out, val, ops, +1.0)
        return out

    def _caloric(self, rho_q, xi):
        """``e = coef * T + const`` with coefficients frozen at temperature ``xi``."""
        eos = self.eos
        if isinstance(eos, eosmod.IdealGasParams):
            return np.full_like(rho_q, eos.cv), np.zeros_like(rho_q)
        if isinstance(eos, eosmod.StiffenedGasParams):
            return np.full_like(rho_q, eos.cv), eos.pi / rho_q + eos.q
        Ub = eosmod.U_over_b(eos, rho_q)
        return eos.cv_fn(xi) - eos.da_dT_fn(xi) * Ub, eos.a_fn(xi) * Ub

    def _linear_caloric(self) -> bool:
        eos = self.eos
        return not isinstance(eos, eosmod.CubicEosParams) or eos.constant_coefficients

    # -- stages ----------------------------------------------------------
    def viscous_momentum_solve(self, s: int, work: ViscousStageWork, dt: float, info: ViscousInfo):
        sp = self.space
        cA = self.tab.a_tilde[s, s] * dt * self.phys.inv_re
        rho_q = sp.eval(work.rho_frozen)
        M = sp.weighted_mass_blocks(rho_q)
        shape = work.m_rhs.shape
        blocks = M[None] + cA * self._stress_blocks
        rhs = work.m_rhs + cA * self._stress_lift

        def op(x):
            X = x.reshape(shape)
            return (np.einsum("cij,kcj->kci", M, X) + cA * self.stress.apply(X)).reshape(-1)

        prec = _multi_block_jacobi(blocks, shape)
        x, rep = cg(op, rhs.reshape(-1), tol=self.cg_tol, maxit=20 * rhs.size, precond=prec)
        info.cg_iterations.append(rep.iterations)
        return x.reshape(shape)

    def viscous_energy_solve(self, s: int, work: ViscousStageWork, U: np.ndarray, T_seed: np.ndarray, dt: float,
                             info: ViscousInfo):
        """Return temperature coefficients at stage ``s``."""
        sp, phys = self.space, self.phys
        a = self.tab.a_tilde[s, s] * dt
        rho_q = sp.eval(work.rho_frozen)
        kin_q = 0.5 * np.sum(sp.eval(U) ** 2, axis=0)
        base = work.e_rhs - phys.mach2 * sp.integrate(rho_q * kin_q) + a * phys.mach2 * phys.inv_re * self.friction_form(U)
        T = T_seed.copy()
        n_it = 0
        max_it = 1 if self._linear_caloric() else self.temperature_max_iter
        for it in range(max_it):
            xi = sp.eval(T)
            coef, const = self._caloric(rho_q, xi)
            Mw = sp.weighted_mass_blocks(rho_q * coef)
            rhs = base - sp.integrate(rho_q * const)
            kap = a * phys.kappa

            def op(x):
                X = x.reshape(T.shape)
                return (np.einsum("cij,cj->ci", Mw, X) + kap * self.heat.apply(X)).reshape(-1)

            prec = block_jacobi(Mw + kap * self._heat_blocks, T.shape)
            x, rep = cg(op, rhs.reshape(-1), tol=self.cg_tol, maxit=20 * rhs.size, precond=prec, x0=T.reshape(-1))
            info.cg_iterations.append(rep.iterations)
            T_new = x.reshape(T.shape)
            incr = np.linalg.norm(T_new - T) / max(np.linalg.norm(T_new), 1e-300)
            T = T_new
            n_it = it + 1
            if max_it > 1 and incr < self.temperature_tol:
                break
        else:
            if max_it > 1:
                raise NoConvergence(f"temperature fixed point: increment {incr:.3e}")
        if np.any(sp.eval(T) <= 0):
            raise NonPhysicalState("non-positive temperature in viscous stage")
        info.temperature_iterations.append(n_it)
        return T

    def step(self, state: FlowState, dt: float, info: Optional[ViscousInfo] = None):
        """Advance the viscous subsystem from the hyperbolic result; density is untouched."""
        info = info if info is not None else ViscousInfo()
        if not self.phys.viscous:
            return state, info
        sp, phys, tab = self.space, self.phys, self.tab
        rho = state.rho
        rho_q = sp.eval(rho)
        p_q = sp.eval(state.p)
        T1_q = eosmod.temperature_from_p_rho(self.eos, p_q, rho_q)
        T_stage = [sp.project_quad(T1_q)]
        U_stage = [state.u.copy()]
        e1 = eosmod.internal_energy_from_rho_T(self.eos, rho_q, T1_q)
        kin1 = 0.5 * np.sum(sp.eval(state.u) ** 2, axis=0)
        m0 = sp.integrate(rho_q[None] * sp.eval(state.u))
        E0 = sp.integrate(rho_q * (e1 + phys.mach2 * kin1))
        stress_hist = [self.stress_form(U_stage[0])]
        heat_hist = [self.heat.apply(T_stage[0])]
        fric_hist = [self.friction_form(U_stage[0])]
        for s in range(1, tab.stages):
            m_rhs = m0.copy()
            e_rhs = E0.copy()
            for m in range(s):
                c = tab.a_tilde[s, m] * dt
                if c:
                    m_rhs -= c * phys.inv_re * stress_hist[m]
                    e_rhs -= c * (phys.kappa * heat_hist[m] - phys.mach2 * phys.inv_re * fric_hist[m])
            work = ViscousStageWork(m_rhs, e_rhs, rho)
            U = self.viscous_momentum_solve(s, work, dt, info) if phys.inv_re else U_stage[0].copy()
            T = self.viscous_energy_solve(s, work, U, T_stage[-1], dt, info)
            U_stage.append(U)
            T_stage.append(T)
            if s < tab.stages - 1:
                stress_hist.append(self.stress_form(U))
                heat_hist.append(self.heat.apply(T))
                fric_hist.append(self.friction_form(U))
        T_q = sp.eval(T_stage[-1])
        p = sp.project_quad(eosmod.pressure_from_rho_T(self.eos, rho_q, T_q))
        return FlowState(rho.copy(), U_stage[-1], p), info


def _multi_block_jacobi(blocks, shape):
    """Block-Jacobi for ``(ncomp, n_cells, k, k)`` blocks acting on ``(ncomp, n_cells, k)`` vectors."""
    inv = np.linalg.inv(blocks)

    def apply(v):
        return np.einsum("kcij,kcj->kci", inv, v.reshape(shape)).reshape(-1)

    return apply


def lie_split_step(hyperbolic, viscous: Optional[ViscousSolver], state: FlowState, dt: float, hinfo=None, vinfo=None):
    """Hyperbolic step followed by the viscous stages (first-order splitting)."""
    new, hinfo = hyperbolic.step(state, dt, hinfo)
    if viscous is not None and viscous.phys.viscous:
        new, vinfo = viscous.step(new, dt, vinfo)
    return new, hinfo, vinfo


def strang_split_step(hyperbolic, viscous, state, dt, hinfo=None, vinfo=None):
    """Second-order splitting (half viscous, full hyperbolic, half viscous); not used by the benchmarks."""
    if viscous is not None and viscous.phys.viscous:
        state, vinfo = viscous.step(state, 0.5 * dt, vinfo)
    state, hinfo = hyperbolic.step(state, dt, hinfo)
    if viscous is not None and viscous.phys.viscous:
        state, vinfo = viscous.step(state, 0.5 * dt, vinfo)
    return state, hinfo, vinfo
