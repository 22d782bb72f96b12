"""Time loop: splitting, adaptation, diagnostics and output files."""
from __future__ import annotations

import csv
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import adapt
from . import eos as eosmod
from .bench import flux_mode, initial_fields, initial_state, make_eos, make_physics, vortex_exact, vortex_params
from .config import CaseConfig
from .dg import DgSpace, l2_error
from .errors import NonPhysicalState
from .hyperbolic import (
    FlowState,
    HyperbolicConfig,
    HyperbolicSolver,
    StepInfo,
    courant_from_state,
    pointwise,
    total_mass,
)
from .imex import ark2, dt_for_courant
from .mesh import AdaptiveMesh, apply_refinement, build_cartesian, min_diameter, write_vtk
from .viscous import ViscousInfo, ViscousSolver, lie_split_step, strang_split_step

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    cfg: CaseConfig
    space: DgSpace
    state: FlowState
    t: float
    steps: int
    dt: float
    courant_rows: List[list] = field(default_factory=list)
    remesh: Optional[adapt.RemeshLog] = None
    mass: List[float] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def max_courant(self) -> float:
        return max((r[2] for r in self.courant_rows), default=float("nan"))


def build_mesh(cfg: CaseConfig) -> AdaptiveMesh:
    return build_cartesian(list(zip(cfg.lower, cfg.upper)), cfg.nel, cfg.periodic, cfg.boundary_tags)


def check_state(space: DgSpace, state: FlowState, step: int) -> None:
    for name in ("rho", "u", "p"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise NonPhysicalState(f"non-finite {name} after step {step}")
    if np.any(space.eval(state.rho) <= 0.0):
        raise NonPhysicalState(f"non-positive density after step {step}")


def corner_values(space: DgSpace, coeffs: np.ndarray) -> np.ndarray:
    """Field values at cell corners in VTK order, shape ``coeffs.shape[:-1] + (n_corners,)``."""
    corners = np.array([[0.0], [1.0]]) if space.dim == 1 else np.array(
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    V, _ = space.ref.eval_at(corners)
    return coeffs @ V.T


def write_fields(path, space: DgSpace, state: FlowState, eos) -> None:
    rho = corner_values(space, state.rho)
    u = np.moveaxis(corner_values(space, state.u), 0, -1)
    p = corner_values(space, state.p)
    pf = {"density": rho, "velocity": u, "pressure": p}
    if np.all(rho > 0):
        pf["temperature"] = eosmod.temperature_from_p_rho(eos, p, rho)
    write_vtk(path, space.mesh, pf, {"level": space.mesh.level})


class Simulation:
    """Owns the mesh, the DG space and both sub-solvers for one case."""

    def __init__(self, cfg: CaseConfig, out_dir: Optional[str] = None):
        self.cfg = cfg.validate()
        self.out_dir = out_dir
        self.eos = make_eos(cfg)
        self.phys = make_physics(cfg)
        self.tableau = ark2(cfg.alpha)
        self.hcfg = HyperbolicConfig(flux=flux_mode(cfg), limiter_threshold=cfg.limiter_threshold,
                                     fp_max_iter=cfg.fp_max_iter, fp_tol=cfg.fp_tol,
                                     duplicate_a31_term=cfg.duplicate_a31_term)
        self.indicator = None
        if cfg.indicator != "none":
            kind = adapt.IndicatorKind(cfg.indicator)
            strat = (adapt.Fraction(cfg.refine, cfg.coarsen) if cfg.marking == "fraction"
                     else adapt.Threshold(cfg.refine, cfg.coarsen))
            self.indicator = adapt.Indicator(kind, strat)
        self._set_space(DgSpace(build_mesh(cfg), cfg.degree, cfg.quadrature))
        self.state = initial_state(cfg, self.space, self.eos)
        self.remesh_log = adapt.RemeshLog()
        if self.indicator is not None:
            self._initial_adaptation()

    # -- setup -----------------------------------------------------------
    def _set_space(self, space: DgSpace) -> None:
        self.space = space
        self.hyperbolic = HyperbolicSolver(space, self.eos, self.phys, self.tableau, self.hcfg)
        self.viscous = None
        if self.phys.viscous:
            self.viscous = ViscousSolver(space, self.eos, self.phys, self.tableau,
                                         wall_velocity={"lid": np.asarray(self.cfg.lid_velocity, dtype=float)})

    def _plan(self):
        vals = adapt.evaluate_indicator(self.indicator.kind, self.space, self.state, self.eos, self.phys)
        return adapt.mark(vals, self.indicator.strategy, self.cfg.min_diam, self.cfg.max_diam)

    def _initial_adaptation(self) -> None:
        """Refine toward the initial data, re-interpolating it on every new mesh."""
        h0 = float(np.min(self.space.mesh.h0))
        levels = int(self.cfg.params.get("initial_levels",
                                         max(0, round(math.log2(h0 / self.cfg.min_diam))) if self.cfg.min_diam > 0 else 0))
        for _ in range(levels):
            plan = self._plan()
            plan.coarsen_set = set()
            mesh = apply_refinement(self.space.mesh, plan)
            if mesh.n_cells == self.space.n_cells:
                break
            self._set_space(DgSpace(mesh, self.cfg.degree, self.cfg.quadrature))
            self.state = initial_state(self.cfg, self.space, self.eos)

    def remesh(self, step: int) -> None:
        plan = self._plan()
        mesh = apply_refinement(self.space.mesh, plan)
        self.remesh_log.record(step, mesh.n_cells, plan)
        if mesh.keys == self.space.mesh.keys:
            return
        new_space = DgSpace(mesh, self.cfg.degree, self.cfg.quadrature)
        self.state = adapt.transfer_state(self.space, new_space, self.state, self.eos, self.phys.mach2)
        self._set_space(new_space)

    def time_step(self) -> float:
        """Fixed step: ``dt`` from the config, or from the Courant target on the initial data."""
        cfg = self.cfg
        if cfg.dt is not None:
            dt = cfg.dt
        else:
            sp = self.space
            v = pointwise(self.eos, sp.eval(self.state.rho), sp.eval(self.state.u), sp.eval(self.state.p),
                          need_c=True)
            H = min_diameter(sp.mesh)
            if cfg.min_diam > 0 and self.indicator is not None:
                H = min(H, cfg.min_diam)
            dt = dt_for_courant(cfg.courant, float(v.c.max()), H, cfg.degree, cfg.mach)
        n = max(1, math.ceil(cfg.t_final / dt - 1e-9))
        return cfg.t_final / n

    # -- loop ------------------------------------------------------------
    def run(self, progress: Optional[Callable] = None, max_steps: Optional[int] = None) -> RunResult:
        cfg = self.cfg
        dt = self.time_step()
        nsteps = max(1, round(cfg.t_final / dt))
        if max_steps is not None:
            nsteps = min(nsteps, max_steps)
        split = strang_split_step if cfg.splitting == "strang" else lie_split_step
        res = RunResult(cfg, self.space, self.state, 0.0, 0, dt, remesh=self.remesh_log)
        res.mass.append(total_mass(self.space, self.state.rho))
        if self.out_dir:
            os.makedirs(self.out_dir, exist_ok=True)
        t0 = time.perf_counter()
        t = 0.0
        for step in range(1, nsteps + 1):
            cp = courant_from_state(self.space, self.eos, self.phys, self.state, dt)
            hinfo, vinfo = StepInfo(), ViscousInfo()
            self.state, hinfo, vinfo = split(self.hyperbolic, self.viscous, self.state, dt, hinfo, vinfo)
            t = step * dt
            check_state(self.space, self.state, step)
            res.courant_rows.append([step, t, cp.C, cp.C_u, int(sum(hinfo.fp_iterations)),
                                     int(sum(hinfo.gmres_iterations)), self.space.n_cells])
            res.mass.append(total_mass(self.space, self.state.rho))
            if self.indicator is not None and step % cfg.remesh_every == 0 and step < nsteps:
                self.remesh(step)
            if self.out_dir and cfg.output_every and step % cfg.output_every == 0:
                write_fields(os.path.join(self.out_dir, f"fields_{step:06d}.vtk"), self.space, self.state, self.eos)
            if progress is not None:
                progress(step, t, self)
        res.wall_time = time.perf_counter() - t0
        res.space, res.state, res.t, res.steps = self.space, self.state, t, nsteps
        if self.out_dir:
            self.write_outputs(res)
        return res

    def write_outputs(self, res: RunResult) -> None:
        d = self.out_dir
        with open(os.path.join(d, "courant.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "time", "C", "C_u", "fp_iterations", "gmres_iterations", "n_cells"])
            w.writerows(res.courant_rows)
        self.remesh_log.write(os.path.join(d, "mesh.csv"))
        write_fields(os.path.join(d, "fields.vtk"), self.space, self.state, self.eos)


def run_case(cfg: CaseConfig, out_dir: Optional[str] = None, **kw) -> RunResult:
    return Simulation(cfg, out_dir).run(**kw)


# --------------------------------------------------------------------------
# convergence


ERROR_HEADER = ["N_el", "L2_rel_rho", "rate_rho", "L2_rel_u", "rate_u", "L2_rel_p", "rate_p"]


def vortex_errors(res: RunResult):
    vp = vortex_params(res.cfg)
    sp, st, t = res.space, res.state, res.t
    return tuple(l2_error(sp, c, (lambda x, y, i=i: vortex_exact(vp, x, y, t)[i]), relative=True)
                 for i, c in enumerate((st.rho, st.u, st.p)))


def rates(nels: Sequence[int], errors: Sequence[float]) -> List[Optional[float]]:
    """Observed orders ``log(e_prev/e)/log(N/N_prev)``; ``None`` for the first or a repeated resolution."""
    out: List[Optional[float]] = [None]
    for k in range(1, len(nels)):
        if nels[k] == nels[k - 1] or errors[k] <= 0 or errors[k - 1] <= 0:
            out.append(None)
        else:
            out.append(math.log(errors[k - 1] / errors[k]) / math.log(nels[k] / nels[k - 1]))
    return out


def convergence_sweep(cfg: CaseConfig, nels: Sequence[int], out_dir: Optional[str] = None,
                      error_fn: Callable = vortex_errors) -> List[list]:
    """Run ``cfg`` on ``N x N`` meshes and tabulate relative L2 errors and rates."""
    errs = []
    for n in nels:
        res = run_case(cfg.replace(nel=(n,) * cfg.dim))
        errs.append(error_fn(res))
        log.info("N=%d errors %s", n, errs[-1])
    cols = [rates(nels, [e[i] for e in errs]) for i in range(3)]
    rows = []
    for k, n in enumerate(nels):
        row = [n]
        for i in range(3):
            row += [errs[k][i], cols[i][k]]
        rows.append(row)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "errors.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(ERROR_HEADER)
            for row in rows:
                w.writerow(["" if v is None else v for v in row])
    return rows


def initial_point_function(cfg: CaseConfig):
    return initial_fields(cfg, make_eos(cfg))
