import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from houluo.errors import (AxisSingularityError, DiagonalSingularityError, InvalidConfigError,
                           SingularityError)
from houluo.kernels import (KernelSpec, boundary_layer_kernel, eval_F_periodic,
                            eval_F_realline, eval_G_periodic, eval_G_realline, eval_K,
                            greens_check, k_hl_periodic, k_mod_periodic, periodization_check,
                            quad_coeffs_periodic, quad_coeffs_realline, relabel_a)

L = 1.0
A_VALUES = (0.01, 0.1, 1.0, 10.0)
LOG2 = math.log(2.0)


# ---------------------------------------------------------------------------
# one-dimensional kernels

def test_hl_kernel_quarter_period():
    assert k_hl_periodic(L / 4, L) == pytest.approx(-LOG2 / (2 * np.pi), abs=1e-15)


def test_hl_kernel_singular_at_lattice():
    with pytest.raises(SingularityError):
        k_hl_periodic(0.0, L)


def test_modified_kernel_half_period():
    # sin^2 = 1: -(1/2pi) log 2
    assert k_mod_periodic(L / 2, L, 1.0) == pytest.approx(-0.110318, abs=1e-6)


def test_modified_kernel_nonpositive_scan():
    z = (np.arange(10_000) + 0.5) / 10_000 * L
    for a in A_VALUES:
        assert np.all(k_mod_periodic(z, L, a) <= 0.0)


def test_relabel_a_values():
    assert relabel_a(0.0, L) == 0.0
    assert relabel_a(1.0, np.pi) == pytest.approx((math.cosh(2.0) - 1) / 2, abs=1e-12)
    assert relabel_a(1.0, np.pi) == pytest.approx(1.381098, abs=1e-6)
    mu = np.pi / L
    a_old = 1e-4
    assert relabel_a(a_old, L) == pytest.approx(mu ** 2 * a_old ** 2, abs=1e-12)


@given(st.floats(0.0, 2.0), st.floats(1e-6, 1.0))
def test_relabel_a_strictly_increasing(a, da):
    assert relabel_a(a + da, L) > relabel_a(a, L)


def test_periodization_point():
    chk = periodization_check(L / 3, 0.1, L, 10_000)
    assert chk.diff <= 1e-6


def test_periodization_zero_width():
    chk = periodization_check(L / 3, 0.0, L, 1000)
    assert chk.truncated_sum == 0.0 and chk.closed_form == 0.0


def test_periodization_tail_shrinks_with_n_max():
    d1 = periodization_check(0.37, 0.5, L, 1000).diff
    d2 = periodization_check(0.37, 0.5, L, 2000).diff
    assert d2 < d1
    # tail ~ a^2 / (pi n_max L^2): halves when n_max doubles
    assert d1 / d2 == pytest.approx(2.0, rel=0.01)


@pytest.mark.parametrize("a_old", [0.05, 0.2, 0.5, 1.0])
def test_periodization_diff_tracks_tail_model(a_old):
    n_max = 10_000
    tail = a_old ** 2 / (np.pi * n_max * L ** 2)
    d = periodization_check(0.41, a_old, L, n_max).diff
    assert d == pytest.approx(tail, rel=0.01)


def test_periodization_rejects_lattice_point():
    with pytest.raises(SingularityError):
        periodization_check(0.0, 0.1, L, 10)


def test_boundary_layer_kernel_values():
    assert boundary_layer_kernel(0.7, 0.0) == 0.0
    assert boundary_layer_kernel(0.3, 0.3) == pytest.approx(math.log(1 / math.sqrt(2)) / np.pi, abs=1e-15)
    assert boundary_layer_kernel(0.3, 0.3) == pytest.approx(-0.110318, abs=1e-6)
    with pytest.raises(SingularityError):
        boundary_layer_kernel(0.0, 0.1)


def test_greens_check_point():
    assert greens_check(0.7, 0.3, 10_000) <= 1e-8


# ---------------------------------------------------------------------------
# two-variable kernels: point oracles

def test_K_points():
    assert eval_K(L / 6, L / 3, L) == pytest.approx(3 * LOG2, abs=1e-12)
    assert eval_K(L / 3, L / 6, L) == pytest.approx(LOG2 / 3, abs=1e-12)
    assert eval_K(L / 3, L / 6, L) >= 2 / 9


def test_K_diagonal_raises():
    with pytest.raises(DiagonalSingularityError):
        eval_K(0.2, 0.2, L)


def test_F_periodic_points():
    assert eval_F_periodic(L / 6, L / 3, 0.0, L) == 0.0
    assert eval_F_periodic(L / 6, L / 3, 0.1, L) == pytest.approx(-0.723477, abs=1e-5)
    exact = -6 * LOG2 + 3 * math.log(1.1 / 0.35)
    assert eval_F_periodic(L / 6, L / 3, 0.1, L) == pytest.approx(exact, abs=1e-13)


def test_F_periodic_large_a_limit():
    K = eval_K(L / 6, L / 3, L)
    assert abs(eval_F_periodic(L / 6, L / 3, 1e6, L) + 2 * K) <= 1e-5


def test_F_periodic_singularities():
    with pytest.raises(DiagonalSingularityError):
        eval_F_periodic(0.2, 0.2, 0.1, L)
    with pytest.raises(AxisSingularityError):
        eval_F_periodic(0.01, 0.2, 0.1, L, delta=0.02)
    with pytest.raises(InvalidConfigError):
        eval_F_periodic(0.1, 0.2, -1.0, L)


def test_G_periodic_points():
    assert eval_G_periodic(L / 6, L / 3, 0.0, L) == 0.0
    g1 = eval_G_periodic(L / 6, L / 3, 0.2, L)
    g2 = eval_G_periodic(L / 3, L / 6, 0.2, L)
    assert abs(g1 - g2) <= 1e-13
    assert g1 > 0


@pytest.mark.parametrize("x,y", [(L / 6, L / 3), (L / 8, 3 * L / 8)])
def test_quad_coeffs_periodic_identities(x, y):
    q = quad_coeffs_periodic(x, y, L)
    assert abs(q.A0) <= 1e-10
    assert q.A1 >= 32
    assert abs(q.A2) <= 1e-10


@pytest.mark.parametrize("x,y", [(L / 6, L / 3), (L / 8, 3 * L / 8), (0.05, 0.4)])
def test_quad_coeffs_reproduce_dG_da(x, y):
    # the coefficients, with their positive prefactors removed, must rebuild
    # dG/da (S- + a)^2 (S+ + a)^2 / mu computed by differencing G itself
    from houluo.kernels import G_periodic_values, quad_coeffs_periodic_values
    mu = np.pi / L
    sp, sm = np.sin(mu * (x + y)) ** 2, np.sin(mu * (x - y)) ** 2
    sx, cx, sy, cy = np.sin(mu * x), np.cos(mu * x), np.sin(mu * y), np.cos(mu * y)
    tt = np.tan(mu * x) * np.tan(mu * y)
    q = quad_coeffs_periodic_values(x, y, mu)
    c2 = q.A2 / (tt / (sx * cx * sy * cy))
    c1 = q.A1 / (tt / (sx * cx * sy * cy) ** 2)
    c0 = q.A0 / (tt / (sm * sp * cx * cy * sx * sy))
    for a in (0.1, 1.0, 10.0):
        h = 1e-5 * a
        dG = (G_periodic_values(x, y, a + h, mu) - G_periodic_values(x, y, a - h, mu)) / (2 * h)
        P = dG * (sm + a) ** 2 * (sp + a) ** 2 / mu
        assert P == pytest.approx(c2 * a * a + c1 * a + c0, rel=1e-7)


def test_F_realline_points():
    assert eval_F_realline(1.0, 2.0, 1.0) == pytest.approx(2 * math.log(5 / 9), abs=1e-12)
    assert eval_F_realline(1.0, 2.0, 1.0) == pytest.approx(-1.175573, abs=1e-6)
    assert eval_F_realline(0.3, 0.7, 0.0) == 0.0


def test_quad_coeffs_realline_point():
    q = quad_coeffs_realline(1.0, 2.0)
    assert abs(q.A2) <= 1e-12 and abs(q.A0) <= 1e-12
    assert q.A1 >= 0


def test_G_realline_symmetric_and_positive():
    g1, g2 = eval_G_realline(0.4, 1.3, 0.5), eval_G_realline(1.3, 0.4, 0.5)
    assert g1 == pytest.approx(g2, rel=1e-13)
    assert g1 > 0


# ---------------------------------------------------------------------------
# properties over random admissible points

def _pair(draw_x, draw_y, upper=L / 2, sep=1e-3):
    x, y = draw_x * upper, draw_y * upper
    return x, y


open_unit = st.floats(0.01, 0.99)
a_st = st.sampled_from(A_VALUES)


@given(open_unit, open_unit, a_st)
def test_F_periodic_nonpositive(u, v, a):
    x, y = _pair(u, v)
    if abs(x - y) < 1e-3:
        return
    assert eval_F_periodic(x, y, a, L) <= 0.0


@given(open_unit, open_unit)
def test_F_approaches_minus_2K_at_rate_one_over_a(u, v):
    x, y = _pair(u, v)
    if abs(x - y) < 1e-2:
        return
    K = eval_K(x, y, L)
    errs = [abs(eval_F_periodic(x, y, a, L) + 2 * K) for a in (1e3, 1e4, 1e5)]
    assert errs[1] < errs[0] and errs[2] < errs[1]
    # O(1/a): the product err * a settles to a constant
    assert errs[2] * 1e5 == pytest.approx(errs[1] * 1e4, rel=0.05)


@given(open_unit, open_unit, st.floats(0.0, 20.0))
def test_G_swap_symmetry(u, v, a):
    x, y = _pair(u, v)
    if abs(x - y) < 1e-3:
        return
    g1, g2 = eval_G_periodic(x, y, a, L), eval_G_periodic(y, x, a, L)
    assert g1 == pytest.approx(g2, rel=1e-12, abs=1e-12)


@given(open_unit, open_unit, st.floats(0.01, 10.0))
def test_G_nondecreasing_in_a(u, v, a):
    x, y = _pair(u, v)
    if abs(x - y) < 1e-3:
        return
    h = 1e-4 * a
    d = eval_G_periodic(x, y, a + h, L) - eval_G_periodic(x, y, a, L)
    assert d >= -1e-9 * max(1.0, abs(eval_G_periodic(x, y, a, L)))


@given(open_unit, open_unit)
def test_K_nonnegative(u, v):
    x, y = _pair(u, v)
    if abs(x - y) < 1e-6:
        return
    assert eval_K(x, y, L) >= 0.0


@given(st.floats(0.05, 5.0), st.floats(0.05, 5.0), st.floats(0.0, 10.0))
def test_F_realline_nonpositive(x, y, a):
    if abs(x - y) < 1e-3:
        return
    assert eval_F_realline(x, y, a) <= 0.0


@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_quad_coeffs_realline_identities(x, y):
    if abs(x - y) < 1e-3:
        return
    q = quad_coeffs_realline(x, y)
    assert abs(q.A2) <= 1e-9 * q.scale2
    assert abs(q.A0) <= 1e-9 * q.scale0
    assert q.A1 >= -1e-9


# ---------------------------------------------------------------------------
# kernel spec

def test_kernel_spec_validation():
    KernelSpec()
    KernelSpec("modifiedHL", a=0.1)
    with pytest.raises(InvalidConfigError):
        KernelSpec("modifiedHL")
    with pytest.raises(InvalidConfigError):
        KernelSpec("HL", a=0.1)
    with pytest.raises(InvalidConfigError):
        KernelSpec("perturbed")
    with pytest.raises(InvalidConfigError):
        KernelSpec("vortex")
