import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imexdg.imex import (
    ALPHA_ORIGINAL,
    GAMMA,
    analyze_tableau,
    ark2,
    courant_numbers,
    dt_for_courant,
    imaginary_extent_closed_form,
    monotonicity_matrices,
    monotonicity_radius,
    monotonicity_radius_fast,
    stability_boundary,
    stability_function,
)
from imexdg.imex import _monotone_at

SQ2 = math.sqrt(2.0)
R_ORIGINAL = abs((2 * SQ2 - 3) / (2 + SQ2))


def test_original_alpha_row():
    t = ark2(ALPHA_ORIGINAL)
    np.testing.assert_allclose(t.a[2], [(2 * GAMMA - 1) / 6, (7 - 2 * GAMMA) / 6, 0.0], rtol=1e-14)


def test_half_alpha_row_and_weights():
    t = ark2(0.5)
    np.testing.assert_array_equal(t.a[2], [0.5, 0.5, 0.0])
    assert t.b.sum() == pytest.approx(1.0, abs=1e-15)
    assert ark2().alpha == 0.5


def test_implicit_tableau_entries():
    t = ark2()
    np.testing.assert_allclose(t.a_tilde[1, :2], [GAMMA / 2, GAMMA / 2], rtol=1e-15)
    np.testing.assert_allclose(t.a_tilde[2], [1 / (2 * SQ2), 1 / (2 * SQ2), 1 - 1 / SQ2], rtol=1e-15)
    np.testing.assert_allclose(t.b, [0.5 - GAMMA / 4, 0.5 - GAMMA / 4, GAMMA / 2], rtol=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 0.5, ALPHA_ORIGINAL, 1.2])
def test_order_conditions(alpha):
    t = ark2(alpha)
    for A in (t.a, t.a_tilde):
        np.testing.assert_allclose(A.sum(axis=1), t.c, atol=1e-15)
    assert t.b.sum() == pytest.approx(1.0, abs=1e-14)
    assert t.b @ t.c == pytest.approx(0.5, abs=1e-14)


def test_implicit_part_is_tr_bdf2():
    t = ark2()
    # trapezoidal first stage over [0, gamma], BDF2 second stage, stiffly accurate
    assert t.a_tilde[1, 0] == t.a_tilde[1, 1] == pytest.approx(GAMMA / 2)
    np.testing.assert_allclose(t.a_tilde[2], t.b, atol=1e-15)
    d = GAMMA / 2
    np.testing.assert_allclose(t.a_tilde[2], [SQ2 / 4, SQ2 / 4, d], atol=1e-15)


def test_radius_original_alpha():
    assert monotonicity_radius(ark2(ALPHA_ORIGINAL)) == pytest.approx(R_ORIGINAL, abs=1e-9)
    assert monotonicity_radius_fast(ALPHA_ORIGINAL) == pytest.approx(R_ORIGINAL, abs=1e-9)


def test_radius_maximized_at_half():
    rows = analyze_tableau(0.3, 1.2, 901)
    best = max(rows, key=lambda r: r[1])
    assert abs(best[0] - 0.5) <= 1e-3 + 1e-12


def test_fast_radius_agrees_with_scan():
    for alpha in list(np.linspace(-0.2, 1.3, 31)) + [ALPHA_ORIGINAL]:
        assert monotonicity_radius_fast(alpha) == pytest.approx(monotonicity_radius(ark2(alpha)), abs=1e-9)


def test_radius_alpha_zero_brute_scan():
    t = ark2(0.0)
    xs = -np.arange(1, 2_000_001) * 1e-6
    ok = np.array([_monotone_at(t, x) for x in xs[::100]])
    first_bad = xs[::100][np.argmin(ok)] if not ok.all() else None
    R = monotonicity_radius(t)
    assert first_bad is not None and abs(-first_bad - R) <= 1e-4
    _, _, _, phi = monotonicity_matrices(t, -R)
    # phi is quadratic for alpha = 0 and stays positive, so it is not the binding condition
    assert phi > 0.1


@pytest.mark.parametrize("alpha", [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, ALPHA_ORIGINAL])
def test_conditions_hold_inside_and_fail_outside(alpha):
    t = ark2(alpha)
    R = monotonicity_radius(t)
    assert _monotone_at(t, -R + 1e-7)
    assert not _monotone_at(t, -R - 1e-7)


def test_matrices_at_zero():
    t = ark2(0.5)
    A, b, e, phi = monotonicity_matrices(t, 0.0)
    np.testing.assert_array_equal(A, t.a)
    np.testing.assert_allclose(b, t.b)
    np.testing.assert_allclose(e, 1.0)
    assert phi == 1.0


def test_b1_closed_form():
    xi, al, g = -0.1, 0.5, GAMMA
    _, b, _, _ = monotonicity_matrices(ark2(al), xi)
    assert b[0] == pytest.approx(0.25 * (2 + g * (-1 + xi * (4 - g + 2 * al * (g * xi - 1)))), abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(xi=st.floats(-2.0, 0.0), alpha=st.floats(0.0, 1.5))
def test_e3_and_phi_closed_forms(xi, alpha):
    _, _, e, phi = monotonicity_matrices(ark2(alpha), xi)
    g = GAMMA
    assert e[2] == pytest.approx(1 + xi + alpha * g * xi**2, abs=1e-12)
    assert phi == pytest.approx(1 + xi + xi**2 / 2 + (3 - 2 * SQ2) * alpha * xi**3, abs=1e-12)


def test_stability_function_at_origin():
    assert abs(stability_function(0.5, 0.0)) == 1.0


def test_imaginary_extent_original_exceeds_half():
    assert stability_boundary(ALPHA_ORIGINAL) > stability_boundary(0.5)
    assert stability_boundary(ALPHA_ORIGINAL) == pytest.approx(imaginary_extent_closed_form(ALPHA_ORIGINAL), abs=1e-9)


def test_imaginary_extent_vanishes_for_large_alpha():
    alphas = [2.0, 10.0, 100.0, 1000.0]
    ext = [stability_boundary(a) for a in alphas]
    assert all(e1 < e0 for e0, e1 in zip(ext, ext[1:]))
    # extent ~ sqrt(2 / (alpha gamma)) -> 0
    assert ext[-1] * math.sqrt(1000.0 * GAMMA) == pytest.approx(SQ2, rel=1e-3)
    for a, e in zip(alphas, ext):
        y = np.linspace(1e-6, e * (1 - 1e-6), 200)
        assert np.all(np.abs(stability_function(a, 1j * y)) < 1)


def test_courant_numbers():
    cp = courant_numbers(c_max=1.2, u_max=0.0, H=2.0, dt=0.01, degree=1, mach=0.1)
    assert cp.C_u == 0.0
    assert cp.C == pytest.approx(1.2 * 0.01 / (0.1 * 2.0))
    dt = dt_for_courant(0.3, 1.2, 2.0, 2, 0.1)
    assert courant_numbers(1.2, 0.0, 2.0, dt, 2, 0.1).C == pytest.approx(0.3)


def test_courant_degree_zero_uses_one():
    assert courant_numbers(1.0, 1.0, 1.0, 0.1, 0, 1.0) == courant_numbers(1.0, 1.0, 1.0, 0.1, 1, 1.0)


def test_scan_resolution_bound():
    with pytest.raises(ValueError):
        monotonicity_radius(ark2(), scan_resolution=1e-3)
