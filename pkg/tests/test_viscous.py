import math

import numpy as np
import pytest

from imexdg import eos as E
from imexdg.dg import DgSpace, l2_error
from imexdg.hyperbolic import FlowState, HyperbolicSolver, Physics
from imexdg.imex import ark2
from imexdg.linsolve import block_jacobi, cg
from imexdg.mesh import RefinementPlan, apply_refinement, build_cartesian
from imexdg.viscous import SipOperator, ViscousInfo, ViscousSolver, lie_split_step, tau_from_grad

IDEAL = E.IdealGasParams(1.4)


def _square(n, periodic=(False, False), tags=None, hanging=False):
    m = build_cartesian([(0, 1), (0, 1)], n, periodic=list(periodic), boundary_tags=tags)
    if hanging:
        m = apply_refinement(m, RefinementPlan(refine_set={0, m.n_cells // 2}))
    return m


def _constant(space, rho, u, p):
    n = (space.n_cells, space.ndofs)
    return FlowState(np.full(n, rho), np.stack([np.full(n, c) for c in u]), np.full(n, p))


# --------------------------------------------------------------------------
# bilinear forms


@pytest.mark.parametrize("kind", ["stress", "laplace"])
@pytest.mark.parametrize("degree", [1, 2])
def test_sip_symmetry(kind, degree):
    sp = DgSpace(_square(3, hanging=True), degree)
    op = SipOperator(sp, kind, {"wall": 0.0 if kind == "laplace" else np.zeros(2)})
    rng = np.random.default_rng(1)
    shape = (2, sp.n_cells, sp.ndofs) if kind == "stress" else (sp.n_cells, sp.ndofs)
    for _ in range(5):
        v, w = rng.standard_normal(shape), rng.standard_normal(shape)
        a, b = np.sum(op.apply(v) * w), np.sum(v * op.apply(w))
        assert abs(a - b) <= 1e-11 * max(1.0, abs(a))


@pytest.mark.parametrize("kind", ["stress", "laplace"])
@pytest.mark.parametrize("dirichlet", [True, False])
def test_sip_coercive(kind, dirichlet):
    sp = DgSpace(_square(2, hanging=True), 1)
    bc = {"wall": 0.0 if kind == "laplace" else np.zeros(2)} if dirichlet else None
    op = SipOperator(sp, kind, bc)
    shape = (2, sp.n_cells, sp.ndofs) if kind == "stress" else (sp.n_cells, sp.ndofs)
    n = int(np.prod(shape))
    A = np.column_stack([op.apply(e.reshape(shape)).reshape(-1) for e in np.eye(n)])
    ev = np.linalg.eigvalsh(0.5 * (A + A.T))
    assert ev.min() >= -1e-10 * ev.max()
    if dirichlet:
        assert ev.min() > 0


def test_cell_blocks_match_operator_diagonal_blocks():
    sp = DgSpace(_square(2, hanging=True), 2)
    op = SipOperator(sp, "stress", {"wall": np.zeros(2)})
    blocks = op.cell_blocks()
    nd = sp.ndofs
    for c in range(2):
        for cell in (0, sp.n_cells - 1):
            for j in range(nd):
                e = np.zeros((2, sp.n_cells, nd))
                e[c, cell, j] = 1.0
                col = op.apply(e)[c, cell]
                np.testing.assert_allclose(col, blocks[c, cell, :, j], atol=1e-11)


def test_stress_tensor():
    Gr = np.zeros((2, 2))
    Gr[0, 0], Gr[1, 1], Gr[1, 0] = 1.0, 1.0, 3.0  # du/dx = dv/dy = 1, du/dy = 3
    t = tau_from_grad(Gr)
    np.testing.assert_allclose(t, [[2 - 4 / 3, 3.0], [3.0, 2 - 4 / 3]])


# --------------------------------------------------------------------------
# manufactured solutions


def _stress_exact(x, y):
    return np.array([np.exp(x) * np.sin(y), x * y * y])


def _stress_forcing(x, y):
    # -(lap u + grad(div u)/3), div u = e^x sin y + 2 x y
    return np.array([-(np.exp(x) * np.sin(y) + 2 * y) / 3.0,
                     -(2 * x + (np.exp(x) * np.cos(y) + 2 * x) / 3.0)])


def _heat_exact(x, y):
    return np.sin(math.pi * x) * np.cos(2 * y) + x


def _heat_forcing(x, y):
    return (math.pi**2 + 4.0) * np.sin(math.pi * x) * np.cos(2 * y)


def _solve_dirichlet(sp, kind, exact, forcing):
    op = SipOperator(sp, kind, {"wall": exact})
    f = forcing(*sp.quad_points)
    if kind == "stress":
        rhs = np.stack([sp.integrate(f[c]) for c in range(2)]) + op.lift()
        shape = rhs.shape
        blocks = op.cell_blocks()
        inv = np.linalg.inv(blocks)

        def prec(v):
            return np.einsum("kcij,kcj->kci", inv, v.reshape(shape)).reshape(-1)
    else:
        rhs = sp.integrate(f) + op.lift()
        shape = rhs.shape
        prec = block_jacobi(op.cell_blocks()[0], shape)
    x, _ = cg(lambda v: op.apply(v.reshape(shape)).reshape(-1), rhs.reshape(-1), tol=1e-13,
              maxit=50 * rhs.size, precond=prec)
    return x.reshape(shape)


def manufactured_rates(kind, degree, nels=(4, 8, 16)):
    exact, forcing = (_stress_exact, _stress_forcing) if kind == "stress" else (_heat_exact, _heat_forcing)
    errs = []
    for n in nels:
        sp = DgSpace(_square(n), degree)
        U = _solve_dirichlet(sp, kind, exact, forcing)
        errs.append(l2_error(sp, U, exact))
    return [math.log(errs[k] / errs[k + 1]) / math.log(nels[k + 1] / nels[k]) for k in range(len(errs) - 1)], errs


@pytest.mark.parametrize("kind", ["stress", "laplace"])
@pytest.mark.parametrize("degree", [1, 2])
def test_manufactured_convergence(kind, degree):
    rates, _ = manufactured_rates(kind, degree)
    assert min(rates) >= degree + 0.5


def test_heat_kernel_decay():
    """Zero-flux walls, u = 0: a cosine mode decays with rate kappa 2 pi^2 / (rho cv)."""
    kappa, t_end = 0.05, 0.2
    errs = []
    for n in (4, 8):
        sp = DgSpace(_square(n), 2)
        T0 = sp.interpolate(lambda x, y: 1.0 + 0.1 * np.cos(math.pi * x) * np.cos(math.pi * y))
        st = FlowState(np.ones_like(T0), np.zeros((2,) + T0.shape), IDEAL.Rg * T0)
        vs = ViscousSolver(sp, IDEAL, Physics(mach=1.0, heat_coefficient=kappa), ark2())
        nsteps = 40
        for _ in range(nsteps):
            st, _ = vs.step(st, t_end / nsteps)
        lam = kappa * 2 * math.pi**2 / IDEAL.cv
        errs.append(l2_error(sp, st.p, lambda x, y: 1.0 + 0.1 * math.exp(-lam * t_end)
                             * np.cos(math.pi * x) * np.cos(math.pi * y)))
    assert errs[1] < 2e-4
    assert errs[1] < errs[0]


# --------------------------------------------------------------------------
# solver behaviour


def test_inviscid_viscous_step_is_identity():
    sp = DgSpace(_square(3), 1)
    st = _constant(sp, 1.0, (0.2, 0.1), 1.0)
    st.p[0, 0] = 1.3
    vs = ViscousSolver(sp, IDEAL, Physics(mach=0.1), ark2())
    out, _ = vs.step(st, 0.1)
    assert out is st


def test_lie_split_without_viscosity_equals_hyperbolic_step():
    sp = DgSpace(_square(3, periodic=(True, True)), 1)
    rng = np.random.default_rng(0)
    st = FlowState(1.0 + 0.01 * rng.random((sp.n_cells, sp.ndofs)), 0.01 * rng.random((2, sp.n_cells, sp.ndofs)),
                   1.0 + 0.01 * rng.random((sp.n_cells, sp.ndofs)))
    phys = Physics(mach=0.1)
    hs = HyperbolicSolver(sp, IDEAL, phys, ark2())
    vs = ViscousSolver(sp, IDEAL, phys, ark2())
    a, _ = hs.step(st, 0.01)
    b, _, _ = lie_split_step(hs, vs, st, 0.01)
    for f in ("rho", "u", "p"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))


def test_rest_state_constant_temperature_unchanged():
    sp = DgSpace(_square(3), 2)
    st = _constant(sp, 1.0, (0.0, 0.0), 1.0)
    vs = ViscousSolver(sp, IDEAL, Physics(mach=0.1, reynolds=100.0), ark2())
    out, _ = vs.step(st, 0.5)
    np.testing.assert_allclose(out.u, 0.0, atol=1e-13)
    np.testing.assert_allclose(out.p, 1.0, rtol=1e-12)


def test_linear_shear_preserved():
    m = _square(4, periodic=(True, False), tags={(1, 1): "lid"})
    sp = DgSpace(m, 1)
    U = np.stack([sp.interpolate(lambda x, y: y), np.zeros((sp.n_cells, sp.ndofs))])
    vs = ViscousSolver(sp, IDEAL, Physics(mach=0.1, reynolds=10.0), ark2(), wall_velocity={"lid": [1.0, 0.0]})
    np.testing.assert_allclose(vs.stress_form(U), 0.0, atol=1e-12)
    st = FlowState(np.ones((sp.n_cells, sp.ndofs)), U, np.ones((sp.n_cells, sp.ndofs)))
    out, _ = vs.step(st, 0.1)
    np.testing.assert_allclose(out.u, U, atol=1e-10)


def test_momentum_independent_of_energy_settings():
    sp = DgSpace(_square(3, tags={(1, 1): "lid"}), 1)
    st = _constant(sp, 1.0, (0.0, 0.0), 1.0)
    outs = []
    for kappa in (0.001, 0.1):
        vs = ViscousSolver(sp, IDEAL, Physics(mach=0.1, reynolds=50.0, heat_coefficient=kappa), ark2(),
                           wall_velocity={"lid": [1.0, 0.0]})
        outs.append(vs.step(st, 0.05)[0])
    np.testing.assert_array_equal(outs[0].u, outs[1].u)
    assert np.abs(outs[0].p - outs[1].p).max() > 0


def test_constant_coefficient_cubic_single_temperature_iteration():
    gas = E.van_der_waals(0.5, 0.5, 1.0, 2.5)
    sp = DgSpace(_square(3), 1)
    T0 = sp.interpolate(lambda x, y: 1.0 + 0.1 * np.cos(math.pi * x))
    rho = np.full_like(T0, 0.5)
    st = FlowState(rho, np.zeros((2,) + T0.shape), E.pressure_from_rho_T(gas, rho, T0))
    vs = ViscousSolver(sp, gas, Physics(mach=0.1, reynolds=100.0), ark2())
    _, info = vs.step(st, 0.05, ViscousInfo())
    assert info.temperature_iterations == [1, 1]


def test_temperature_dependent_cubic_fixed_point_converges():
    gas = E.n2o_coeffs()[1]
    sp = DgSpace(_square(2), 1)
    T0 = sp.interpolate(lambda x, y: 300.0 + 5.0 * np.cos(math.pi * x))
    rho = np.full_like(T0, 50.0)
    st = FlowState(rho, np.zeros((2,) + T0.shape), E.pressure_from_rho_T(gas, rho, T0))
    vs = ViscousSolver(sp, gas, Physics(mach=0.1, heat_coefficient=1e-3), ark2())
    out, info = vs.step(st, 0.05, ViscousInfo())
    assert all(1 < n < 50 for n in info.temperature_iterations)
    assert abs((out.p * sp.J[:, None]).sum() / (st.p * sp.J[:, None]).sum() - 1.0) < 1e-3


@pytest.mark.parametrize("reynolds", [math.inf, 100.0])
def test_free_stream_split_step(reynolds):
    sp = DgSpace(_square(3, periodic=(True, True)), 2)
    st = _constant(sp, 1.0, (0.4, -0.3), 1.0)
    phys = Physics(mach=0.1, reynolds=reynolds)
    hs = HyperbolicSolver(sp, IDEAL, phys, ark2())
    vs = ViscousSolver(sp, IDEAL, phys, ark2())
    out, _, _ = lie_split_step(hs, vs, st, 0.05)
    for f in ("rho", "u", "p"):
        np.testing.assert_allclose(getattr(out, f), getattr(st, f), rtol=1e-12, atol=1e-12)
