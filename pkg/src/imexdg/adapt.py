"""Refinement indicators, marking and solution transfer between meshes."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

from . import eos as eosmod
from .dg import DgSpace, ReferenceElement
from .errors import UnsupportedIndicator
from .hyperbolic import FlowState, Physics, density_jump_indicator
from .mesh import AdaptiveMesh, RefinementPlan


class IndicatorKind(enum.Enum):
    DensityGradient = "density_gradient"
    Vorticity = "vorticity"
    PotentialTemperatureGradient = "theta_gradient"
    BetaGradient = "beta_gradient"
    GammaPrhoInvariantGradient = "gamma_prho_gradient"
    DensityFaceJump = "density_jump"


@dataclass(frozen=True)
class Threshold:
    refine: float
    coarsen: float


@dataclass(frozen=True)
class Fraction:
    refine_frac: float
    coarsen_frac: float


Strategy = Union[Threshold, Fraction]


@dataclass
class Indicator:
    kind: IndicatorKind
    strategy: Strategy


# --------------------------------------------------------------------------
# indicators


def _nodal_grad_matrices(space: DgSpace):
    ref = space.ref
    _, G = ref.eval_at(ref.nodal_points())
    return G  # (dim, n_nodes, ndofs)


def nodal_gradient_norm_max(space: DgSpace, coeffs: np.ndarray) -> np.ndarray:
    """``max_i |grad f|`` over the nodes of each cell for a DG field ``f``."""
    G = _nodal_grad_matrices(space)
    sq = 0.0
    for k in range(space.dim):
        g = (coeffs @ G[k].T) / space.h[:, k, None]
        sq = sq + g * g
    return np.sqrt(sq).max(axis=1)


def exner(p, rg, cp, p0: float = 1.0):
    """Exner pressure ``(p/p0)^(R/cp)``; ``p0 = 1`` is the non-dimensional 1e5 Pa reference."""
    return (np.asarray(p) / p0) ** (rg / cp)


def potential_temperature(eos, rho, p):
    if not isinstance(eos, eosmod.IdealGasParams):
        raise UnsupportedIndicator("potential temperature needs an ideal gas")
    T = eosmod.temperature_from_p_rho(eos, p, rho)
    cp = eos.gamma / (eos.gamma - 1.0) * eos.Rg
    return T / exner(p, eos.Rg, cp)


def evaluate_indicator(kind: IndicatorKind, space: DgSpace, state: FlowState, eos=None,
                       phys: Optional[Physics] = None) -> np.ndarray:
    """Per-cell indicator values (nonnegative)."""
    if kind is IndicatorKind.DensityGradient:
        return nodal_gradient_norm_max(space, state.rho)
    if kind is IndicatorKind.Vorticity:
        if space.dim != 2:
            raise UnsupportedIndicator("vorticity needs two dimensions")
        g = space.grad(state.u)  # g[k, c] = d u_c / d x_k
        curl = g[0, 1] - g[1, 0]
        diam2 = np.sum(space.h**2, axis=1)
        return diam2 * (curl**2 * space.quad_weights).sum(axis=1)
    if kind is IndicatorKind.DensityFaceJump:
        return density_jump_indicator(space, state.rho)
    # nodal basis: coefficients are the nodal values
    rho, p = state.rho, state.p
    if np.any(rho <= 0) or np.any(p <= 0):
        raise UnsupportedIndicator("indicator needs positive nodal density and pressure")
    if kind is IndicatorKind.PotentialTemperatureGradient:
        field = potential_temperature(eos, rho, p)
    elif kind is IndicatorKind.BetaGradient:
        if not isinstance(eos, eosmod.CubicEosParams) or not eos.constant_coefficients:
            raise UnsupportedIndicator("beta needs a cubic EOS with constant a and cv")
        field = eosmod.isentropic_invariant_beta(eos, eosmod.ThermoState(rho=rho, p=p))
    elif kind is IndicatorKind.GammaPrhoInvariantGradient:
        g = eosmod.isentropic_exponent_gamma_prho(eos, eosmod.ThermoState(rho=rho, p=p))
        field = p / rho**g
    else:
        raise UnsupportedIndicator(str(kind))
    return nodal_gradient_norm_max(space, field)


# --------------------------------------------------------------------------
# marking


def mark(values: np.ndarray, strategy: Strategy, min_diam: float = 0.0, max_diam: float = math.inf) -> RefinementPlan:
    values = np.asarray(values, dtype=float)
    n = len(values)
    if isinstance(strategy, Threshold):
        refine = set(np.nonzero(values > strategy.refine)[0].tolist())
        coarsen = set(np.nonzero(values < strategy.coarsen)[0].tolist()) - refine
    elif isinstance(strategy, Fraction):
        order = np.argsort(-values, kind="stable")
        nr = int(round(strategy.refine_frac * n))
        nc = int(round(strategy.coarsen_frac * n))
        refine = set(order[:nr].tolist())
        coarsen = set(order[n - nc:].tolist()) - refine if nc else set()
    else:
        raise TypeError(strategy)
    return RefinementPlan(refine_set=refine, coarsen_set=coarsen, min_diam=min_diam, max_diam=max_diam)


# --------------------------------------------------------------------------
# transfer


class _TransferTables:
    def __init__(self, degree: int, dim: int):
        self.ref = ReferenceElement(degree, dim)
        self.dim = dim
        self._inject: Dict[tuple, np.ndarray] = {}
        self._restrict: Dict[tuple, np.ndarray] = {}

    def inject(self, depth: int, offset: tuple) -> np.ndarray:
        """Child coefficients ``= P @ ancestor coefficients``."""
        key = (depth, offset)
        if key not in self._inject:
            s = 2.0**-depth
            pts = np.asarray(offset, dtype=float)[None, :] * s + s * self.ref.nodal_points()
            self._inject[key], _ = self.ref.eval_at(pts)
        return self._inject[key]

    def restrict(self, depth: int, offset: tuple) -> np.ndarray:
        """Contribution of one descendant to the ancestor's L2 projection."""
        key = (depth, offset)
        if key not in self._restrict:
            s = 2.0**-depth
            ref = self.ref
            pts = np.asarray(offset, dtype=float)[None, :] * s + s * ref.points
            Vp, _ = ref.eval_at(pts)
            self._restrict[key] = ref.mass_inv @ ((Vp.T * ref.W) @ ref.V) * s**self.dim
        return self._restrict[key]


def _relative(anc, key):
    depth = key[0] - anc[0]
    return depth, tuple(int(i - (a << depth)) for i, a in zip(key[1:], anc[1:]))


def _coarsened_parents(old_mesh: AdaptiveMesh, new_mesh: AdaptiveMesh) -> Dict[tuple, list]:
    """New keys that replace several old cells, mapped to ``[(old key, old index), ...]``."""
    pending: Dict[tuple, list] = {}
    new_set = set(new_mesh.keys)
    for ok, oi in old_mesh.index.items():
        if ok in new_set:
            continue
        anc = ok
        while anc[0] > 0:
            anc = (anc[0] - 1,) + tuple(i >> 1 for i in anc[1:])
            if anc in new_set:
                pending.setdefault(anc, []).append((ok, oi))
                break
    return pending


def transfer_solution(old_mesh: AdaptiveMesh, new_mesh: AdaptiveMesh, fields, degree: int):
    """Move DG coefficient arrays (``(..., n_cells, ndofs)``) from ``old_mesh`` to ``new_mesh``.

    Refined cells receive the parent polynomial (exact); coarsened cells the
    L2 projection of their children, which preserves cell integrals.
    """
    tab = _TransferTables(degree, old_mesh.dim)
    single = isinstance(fields, np.ndarray)
    arrs = [fields] if single else list(fields)
    outs = [np.zeros(a.shape[:-2] + (new_mesh.n_cells, a.shape[-1])) for a in arrs]
    old_index = old_mesh.index
    pending = _coarsened_parents(old_mesh, new_mesh)
    for ni, nk in enumerate(new_mesh.keys):
        if nk in old_index:
            oi = old_index[nk]
            for a, o in zip(arrs, outs):
                o[..., ni, :] = a[..., oi, :]
            continue
        if nk in pending:
            for ok, oi in pending[nk]:
                R = tab.restrict(*_relative(nk, ok))
                for a, o in zip(arrs, outs):
                    o[..., ni, :] += a[..., oi, :] @ R.T
            continue
        anc = nk
        while anc not in old_index:
            if anc[0] == 0:
                raise ValueError(f"cell {nk} has no counterpart on the old mesh")
            anc = (anc[0] - 1,) + tuple(i >> 1 for i in anc[1:])
        P = tab.inject(*_relative(anc, nk))
        oi = old_index[anc]
        for a, o in zip(arrs, outs):
            o[..., ni, :] = a[..., oi, :] @ P.T
    return outs[0] if single else outs


def _total_energy_density(eos, rho, u, p, mach2):
    e = eosmod.internal_energy(eos, p, rho)
    return rho * (e + 0.5 * mach2 * np.sum(u * u, axis=0))


def _conserve_on_coarsened(old_space: DgSpace, new_space: DgSpace, state: FlowState, new: FlowState,
                           eos, mach2: float, newton_tol: float = 1e-14, newton_max: int = 20) -> None:
    """Correct velocity and pressure on coarsened cells so that momentum and total energy are conserved.

    Velocity becomes the density-weighted projection of the children's
    momentum; pressure receives a per-cell constant shift that matches the
    children's total energy (Newton iteration, exact in one step for affine
    caloric relations).
    """
    pending = _coarsened_parents(old_space.mesh, new_space.mesh)
    if not pending:
        return
    ref, hi = new_space.ref, new_space.ref_hi
    V_hi, _ = ref.eval_at(hi.points)
    parents = np.array([new_space.mesh.index[k] for k in pending])
    children = [[oi for _, oi in pending[k]] for k in pending]
    # old fields at the children's high-order points
    flat = np.array([oi for ch in children for oi in ch])
    rho_c = old_space.hi_eval(state.rho[flat])
    u_c = old_space.hi_eval(state.u[:, flat])
    p_c = old_space.hi_eval(state.p[flat])
    E_c = _total_energy_density(eos, rho_c, u_c, p_c, mach2)
    w_c = hi.W[None, :] * old_space.J[flat][:, None]
    dim = new_space.dim
    mom_rhs = np.zeros((dim, len(parents), ref.ndofs))
    E_target = np.zeros(len(parents))
    row = 0
    for n, (key, ch) in enumerate(zip(pending, children)):
        for ok, _ in pending[key]:
            depth, off = _relative(key, ok)
            s = 2.0**-depth
            Vp, _ = ref.eval_at(np.asarray(off, dtype=float)[None, :] * s + s * hi.points)
            wm = w_c[row] * rho_c[row]
            for c in range(dim):
                mom_rhs[c, n] += Vp.T @ (wm * u_c[c, row])
            E_target[n] += (w_c[row] * E_c[row]).sum()
            row += 1
    rho_p = new.rho[parents] @ V_hi.T
    w_p = hi.W[None, :] * new_space.J[parents][:, None]
    A = np.einsum("qi,cq,qj->cij", V_hi, w_p * rho_p, V_hi)
    u_par = np.linalg.solve(A[None], mom_rhs[..., None])[..., 0]
    new.u[:, parents] = u_par
    kin = 0.5 * mach2 * np.sum((u_par @ V_hi.T) ** 2, axis=0)
    p0 = new.p[parents] @ V_hi.T
    delta = np.zeros(len(parents))
    for _ in range(newton_max):
        p_try = p0 + delta[:, None]
        e = eosmod.internal_energy(eos, p_try, rho_p)
        f = (w_p * rho_p * (e + kin)).sum(axis=1) - E_target
        _, e_p = eosmod.energy_derivatives(eos, p_try, rho_p)
        step = f / (w_p * rho_p * e_p).sum(axis=1)
        delta -= step
        if np.all(np.abs(f) <= newton_tol * np.abs(E_target)):
            break
    new.p[parents] += delta[:, None]


def transfer_state(old_space: DgSpace, new_space: DgSpace, state: FlowState, eos=None,
                   mach2: Optional[float] = None) -> FlowState:
    """Transfer a flow state; with ``eos`` and ``mach2`` given, coarsening conserves momentum and energy."""
    rho, u, p = transfer_solution(old_space.mesh, new_space.mesh, [state.rho, state.u, state.p], old_space.degree)
    new = FlowState(rho, u, p)
    if eos is not None and mach2 is not None:
        _conserve_on_coarsened(old_space, new_space, state, new, eos, mach2)
    return new


class RemeshLog:
    """CSV log of remesh events: step, active cells, refine and coarsen marks."""

    header = ["step", "n_active_cells", "n_refine_marked", "n_coarsen_marked"]

    def __init__(self, path=None):
        self.path = path
        self.rows = []

    def record(self, step: int, n_cells: int, plan: RefinementPlan):
        self.rows.append([step, n_cells, len(plan.refine_set), len(plan.coarsen_set)])

    def write(self, path=None):
        path = path or self.path
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header)
            w.writerows(self.rows)
