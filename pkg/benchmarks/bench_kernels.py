"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is compiled once before timing; the table reports the best
wall time per call and the max absolute difference between backends.
"""
import argparse
import timeit

import numpy as np

from imexdg import _accel, kernels
from imexdg import eos as E


def _fv_state(shape, seed=0):
    rng = np.random.default_rng(seed)
    rho = 1.0 + 0.3 * rng.random(shape)
    u = 0.5 * rng.standard_normal((len(shape),) + shape)
    p = 1.0 + 0.2 * rng.random(shape)
    rhoE = p / 0.4 + 0.5 * rho * np.sum(u * u, axis=0)
    s = np.sqrt(np.sum(u * u, axis=0)) + np.sqrt(1.4 * p / rho)
    return rho, rho * u, rhoE, p, s


def cases():
    rho, m, rhoE, p, s = _fv_state((16000,))
    yield "llf_residual_1d n=16000", lambda: kernels.llf_residual_1d(rho, m[0], rhoE, p, s, 1.0 / 16000, 1.0)

    r2, m2, e2, p2, s2 = _fv_state((200, 400), 1)
    yield "llf_residual_2d 200x400", lambda: kernels.llf_residual_2d(r2, m2[0], m2[1], e2, p2, s2, 5.0, 5.0, 1e-5,
                                                                     kernels.WALL, kernels.WALL)

    gas = E.n2o_coeffs()[1]
    sa = gas.soave
    rng = np.random.default_rng(2)
    T = 280.0 + 60.0 * rng.random(20000)
    rh = 5.0 + 80.0 * rng.random(20000)
    pp = E.pressure_from_rho_T(gas, rh, T)
    T0 = np.full_like(pp, 300.0)
    yield "soave_temperature n=20000", lambda: kernels.soave_temperature(pp, rh, T0, sa.ac, sa.kappa, sa.Tc, gas.b,
                                                                         gas.r1, gas.r2, gas.Rg)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    saved = _accel.backend()
    print(f"{'kernel':28s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    try:
        for name, fn in cases():
            times, outs = {}, {}
            for backend in ("numpy", "numba"):
                _accel.set_backend(backend)
                outs[backend] = fn()  # warm-up (and JIT compile)
                times[backend] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            diff = float(np.max(np.abs(outs["numba"] - outs["numpy"])))
            print(f"{name:28s} {1e3 * times['numpy']:11.2f} {1e3 * times['numba']:11.2f} "
                  f"{times['numpy'] / times['numba']:8.1f} {diff:10.1e}")
    finally:
        _accel.set_backend(saved)


if __name__ == "__main__":
    main()
