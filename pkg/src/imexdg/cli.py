"""Command line entry point (``imexdg``)."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np


def _set_threads(n):
    if n is None:
        n = os.environ.get("IMEXDG_THREADS")
    if n is None or n == "":
        return
    n = int(n)
    if n < 1:
        raise SystemExit("--threads must be >= 1")
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def _ints(s: str):
    return [int(t) for t in s.split(",") if t.strip()]


def cmd_run(args) -> int:
    from . import config
    from .solver import Simulation

    cfg = config.load(args.config)
    out = args.out or cfg.out
    cfg = cfg.replace(out=out)

    def progress(step, t, sim):
        if step % 50 == 0:
            logging.info("step %d t=%.6g cells=%d", step, t, sim.space.n_cells)

    res = Simulation(cfg, out).run(progress=progress)
    print(f"{cfg.case}: {res.steps} steps, dt={res.dt:.6g}, max C={res.max_courant:.4g}, "
          f"wall {res.wall_time:.1f}s, output in {out}")
    return 0


def cmd_convergence(args) -> int:
    from .bench import case_library
    from .solver import ERROR_HEADER, convergence_sweep

    lib = case_library()
    if args.case not in lib or not args.case.startswith("vortex"):
        raise SystemExit("convergence needs an analytic case (vortex)")
    cfg = lib[args.case].replace(degree=args.degree, courant=args.courant, dt=None)
    if args.alpha is not None:
        cfg = cfg.replace(alpha=args.alpha)
    if args.duplicate_a31_term:
        cfg = cfg.replace(duplicate_a31_term=True)
    rows = convergence_sweep(cfg, _ints(args.nel), args.out)
    w = csv.writer(sys.stdout)
    w.writerow(ERROR_HEADER)
    for row in rows:
        w.writerow(["" if v is None else (f"{v:.4e}" if isinstance(v, float) and i % 2 else
                                          (f"{v:.2f}" if isinstance(v, float) else v))
                    for i, v in enumerate(row)])
    return 0


def cmd_analyze(args) -> int:
    from .imex import analyze_tableau

    w = csv.writer(sys.stdout)
    w.writerow(["alpha", "R", "imag_axis_extent"])
    for a, R, im in analyze_tableau(args.alpha_min, args.alpha_max, args.steps):
        w.writerow([f"{a:.6f}", f"{R + 0.0:.6f}", f"{im:.6f}"])
    return 0


def cmd_riemann(args) -> int:
    from .bench import SOD, exact_riemann_ideal

    if args.case != "sod":
        raise SystemExit("only the sod case has an exact solution")
    x = np.linspace(-0.5, 0.5, args.points)
    rho, u, p = exact_riemann_ideal(SOD, args.gamma, x, args.t)
    w = csv.writer(sys.stdout)
    w.writerow(["x", "rho", "u", "p"])
    for row in zip(x, rho, u, p):
        w.writerow([f"{v:.10g}" for v in row])
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="imexdg", description="IMEX-DG solver for low Mach compressible flows")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configured case")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("convergence", help="mesh convergence sweep against the analytic vortex")
    p.add_argument("--case", default="vortex")
    p.add_argument("--nel", default="10,20,40")
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--courant", type=float, default=0.01)
    p.add_argument("--alpha", type=float)
    p.add_argument("--duplicate-a31-term", action="store_true")
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("analyze-tableau", help="monotonicity radius and stability extent versus alpha")
    p.add_argument("--alpha-min", type=float, default=0.3)
    p.add_argument("--alpha-max", type=float, default=1.2)
    p.add_argument("--steps", type=int, default=19)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("riemann", help="exact Riemann profiles")
    p.add_argument("--case", default="sod")
    p.add_argument("--t", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=1.4)
    p.add_argument("--points", type=int, default=201)
    p.set_defaults(func=cmd_riemann)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    _set_threads(getattr(args, "threads", None))
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
