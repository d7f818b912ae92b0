import math

import numpy as np
import pytest
import scipy.integrate as si
from hypothesis import given, strategies as st

from houluo.biot_savart import (cot_weighted_velocity, layer_beta, velocity,
                                velocity_gradient, velocity_hl_spectral, velocity_modified,
                                velocity_perturbed, velocity_realline)
from houluo.errors import MeanNotZeroError, SupportOverflowError, SymmetryError
from houluo.grid import (REALLINE, DomainConfig, GridField, SymmetryClass, make_grid,
                         symmetry_defect)
from houluo.kernels import KernelSpec
from houluo.scenarios import (bump, bump_mass, cosine_perturbation, estimate_eps1,
                              modified_kernel_perturbation, zero_perturbation)

L = 1.0


def periodic(N, fn):
    d = DomainConfig(L, N)
    return GridField.from_function(d, fn)


def sin_mode(N, k=1):
    mu = np.pi / L
    return periodic(N, lambda x: np.sin(2 * k * mu * x))


def closed_factor(a):
    # 1 - e^{-beta}, cosh(beta) = 1 + 2a
    return 1.0 - (1 + 2 * a - 2 * math.sqrt(a * a + a))


# ---------------------------------------------------------------------------
# HL law

def test_hl_zero():
    w = GridField.zeros(DomainConfig(L, 64))
    assert np.all(velocity_hl_spectral(w).values == 0.0)


@pytest.mark.parametrize("k", [1, 2])
def test_hl_single_modes(k):
    w = sin_mode(64, k)
    u = velocity_hl_spectral(w).values
    np.testing.assert_allclose(u, -(L / (2 * np.pi * k)) * w.values, atol=1e-12)


def test_hl_gradient_is_minus_cosine():
    w = sin_mode(64)
    ux = velocity_gradient(w, KernelSpec()).values
    mu = np.pi / L
    np.testing.assert_allclose(ux, -np.cos(2 * mu * w.x), atol=1e-12)


def test_hl_rejects_nonzero_mean():
    w = periodic(32, lambda x: 1.0 + np.sin(2 * np.pi * x))
    with pytest.raises(MeanNotZeroError):
        velocity_hl_spectral(w)


# ---------------------------------------------------------------------------
# modified law

def test_modified_zero():
    w = GridField.zeros(DomainConfig(L, 64))
    assert np.all(velocity_modified(w, 0.5).values == 0.0)


def test_layer_beta_matches_cosh():
    for a in (0.01, 0.5, 1.5, 10.0):
        assert math.cosh(layer_beta(a)) == pytest.approx(1 + 2 * a, rel=1e-14)


def test_modified_closed_form_factor():
    assert closed_factor(1.5) == pytest.approx(1 - (4 - math.sqrt(15)), abs=1e-15)
    assert closed_factor(1.5) == pytest.approx(0.872983, abs=1e-6)
    w = sin_mode(512)
    for a in (0.5, 1.5):
        u = velocity_modified(w, a).values
        np.testing.assert_allclose(u, -(L / (2 * np.pi)) * closed_factor(a) * w.values, atol=1e-8)


def test_modified_small_a_tends_to_hl():
    w = periodic(256, lambda x: np.sin(2 * np.pi * x) + 0.5 * np.sin(6 * np.pi * x))
    d = velocity_modified(w, 1e-8).values - velocity_hl_spectral(w).values
    assert np.max(np.abs(d)) <= 1e-3


def test_modified_limits_follow_closed_factor():
    # 1 - e^{-beta} -> 0 as a -> 0 and -> 1 as a -> infinity
    w = periodic(256, lambda x: np.sin(2 * np.pi * x) + 0.5 * np.sin(6 * np.pi * x))
    hl = velocity_hl_spectral(w).values
    assert np.max(np.abs(velocity_modified(w, 1e-8).values)) <= 1e-3 * np.max(np.abs(hl))
    assert np.max(np.abs(velocity_modified(w, 1e8).values - hl)) <= 1e-3 * np.max(np.abs(hl))


def test_modified_routes_agree():
    # multiplier vs midpoint convolution with the smooth correction
    mu = np.pi / L
    w = periodic(2048, lambda x: np.sin(2 * mu * x) * np.exp(np.cos(2 * mu * x)))
    w = w.with_values(w.values - np.mean(w.values))
    for a in (0.1, 0.5, 1.5):
        d = velocity_modified(w, a).values - velocity_modified(w, a, "quadrature").values
        assert np.max(np.abs(d)) <= 1e-6


def test_modified_gradient_below_hl():
    w = sin_mode(128)
    hl = np.max(np.abs(velocity_gradient(w, KernelSpec()).values))
    for a in (0.1, 1.0, 10.0):
        mod = np.max(np.abs(velocity_gradient(w, KernelSpec("modifiedHL", a=a)).values))
        assert mod <= hl


# ---------------------------------------------------------------------------
# perturbed law

def test_perturbed_zero_f_is_hl_exactly():
    w = periodic(128, lambda x: np.sin(2 * np.pi * x) + 0.2 * np.sin(8 * np.pi * x))
    f = zero_perturbation(L)
    np.testing.assert_array_equal(velocity_perturbed(w, f).values,
                                  velocity_hl_spectral(w).values)


def test_perturbed_modified_choice_reproduces_modified_law():
    # the perturbation -log sqrt(sin^2 mu(x - y) + a) turns HL into the modified law
    a = 0.5
    f = modified_kernel_perturbation(L, a)
    mu = np.pi / L
    w = periodic(256, lambda x: np.sin(2 * mu * x) + 0.3 * np.cos(6 * mu * x))
    d = velocity_perturbed(w, f).values - velocity_modified(w, a).values
    assert np.max(np.abs(d)) <= 1e-10


def test_perturbed_cosine_against_quadrature():
    # u_f(x) = (1/pi) int cos(2 mu (x - y)) sin(2 mu y) dy, evaluated by adaptive quadrature
    mu = np.pi / L
    f = cosine_perturbation(L, amplitude=1.0)
    w = sin_mode(2048)
    uf = velocity_perturbed(w, f).values - velocity_hl_spectral(w).values
    x = w.x
    for i in range(0, 2048, 256):
        ref = si.quad(lambda y: math.cos(2 * mu * (x[i] - y)) * math.sin(2 * mu * y),
                      0.0, L, epsabs=1e-14, limit=200)[0] / np.pi
        assert uf[i] == pytest.approx(ref, abs=1e-10)


def test_perturbed_fast_path_matches_dense_product():
    f = cosine_perturbation(L, amplitude=0.7, mode=2)
    d = DomainConfig(L, 512)
    x = make_grid(d)
    w = GridField(d, np.sin(2 * np.pi * x) ** 3)
    dense = velocity_hl_spectral(w).values + (d.dx / np.pi) * (f(x[:, None], x[None, :]) @ w.values)
    np.testing.assert_allclose(velocity_perturbed(w, f).values, dense, atol=1e-14)


def test_perturbed_windowed_table_for_compact_data():
    f = cosine_perturbation(L, amplitude=0.7)
    d = DomainConfig(L, 1024)
    x = make_grid(d)
    half = bump(x, 0.05)
    w = GridField(d, half - half[::-1] + 1e-3 * np.sin(2 * np.pi * x) * 0)
    # break oddness slightly so the windowed (non-folded) path runs
    v = w.values.copy()
    v[3] += 1e-9
    v -= np.mean(v)
    v[np.abs(v) < 1e-300] = 0.0
    w = GridField(d, np.where(np.abs(v) > 1e-12, v, 0.0))
    dense = velocity_hl_spectral(w).values + (d.dx / np.pi) * (f(x[:, None], x[None, :]) @ w.values)
    np.testing.assert_allclose(velocity_perturbed(w, f).values, dense, atol=1e-14)


# ---------------------------------------------------------------------------
# real line

def realline_field(N, X, fn):
    d = DomainConfig(X, N, REALLINE)
    return GridField.from_function(d, fn)


def test_realline_zero():
    w = realline_field(64, 2.0, lambda x: 0 * x)
    assert np.all(velocity_realline(w, KernelSpec(geometry=REALLINE)).values == 0.0)


def test_realline_far_field():
    # unit-mass bump of width c at the origin: u(x) -> log|x| / pi, error O(c^2)
    X = 4.0
    errs = []
    for c in (0.4, 0.2):
        w = realline_field(4096, X, lambda x: bump(x + c / 2, c) / bump_mass(c))
        mass = np.sum(w.values) * w.domain.dx
        assert mass == pytest.approx(1.0, rel=1e-6)
        u = velocity_realline(w, KernelSpec(geometry=REALLINE)).values
        far = (np.abs(w.x) > 2.0) & (np.abs(w.x) < 3.5)
        errs.append(np.max(np.abs(u[far] - np.log(np.abs(w.x[far])) / np.pi)))
    assert errs[0] <= 0.4 ** 2
    assert errs[1] == pytest.approx(errs[0] / 4, rel=0.1)


def _quad_reference(x):
    f = lambda y: math.log(abs(x - y)) * float(bump(y + 0.5, 1.0)) / math.pi
    pts = [x] if -0.5 < x < 0.5 else None
    return si.quad(f, -0.5, 0.5, points=pts, limit=400, epsabs=1e-14, epsrel=1e-13)[0]


def test_realline_second_order_self_convergence():
    errs = []
    for N in (512, 1024, 2048):
        w = realline_field(N, 2.0, lambda x: bump(x + 0.5, 1.0))
        u = velocity_realline(w, KernelSpec(geometry=REALLINE)).values
        idx = np.arange(N // 128, N, N // 64)
        errs.append(max(abs(u[i] - _quad_reference(w.x[i])) for i in idx))
    assert errs[0] / errs[1] >= 4.0
    assert errs[1] / errs[2] >= 4.0


def test_realline_support_overflow():
    w = realline_field(64, 1.0, lambda x: np.ones_like(x))
    with pytest.raises(SupportOverflowError):
        velocity_realline(w, KernelSpec(geometry=REALLINE))


def test_realline_gradient_against_principal_value_quadrature():
    # u_x(x) = -(1/pi) PV int omega(y) / (y - x) dy
    def om(y):
        return np.sign(y) * bump(np.abs(y), 1.0)

    errs = []
    for N in (512, 1024, 2048):
        w = realline_field(N, 3.0, om)
        ux = velocity_gradient(w, KernelSpec(geometry=REALLINE)).values
        idx = np.arange(N // 128, N, N // 64)
        err = 0.0
        for i in idx:
            x = w.x[i]
            ref = 0.0
            for lo, hi in ((-1.0, 0.0), (0.0, 1.0)):
                if lo < x < hi:
                    ref += si.quad(lambda y: float(om(y)), lo, hi, weight="cauchy", wvar=x)[0]
                else:
                    ref += si.quad(lambda y: float(om(y)) / (y - x), lo, hi, epsabs=1e-13)[0]
            err = max(err, abs(ux[i] + ref / np.pi))
        errs.append(err)
    assert errs[0] / errs[1] >= 3.5
    assert errs[1] / errs[2] >= 3.5


def test_realline_modified_gradient_consistent_with_velocity():
    # the Hilbert route and a difference of u agree to second order in dx
    from houluo.grid import fd4_derivative_values
    spec = KernelSpec("modifiedHL", REALLINE, a=0.3)
    gaps = []
    for N in (1024, 2048):
        w = realline_field(N, 3.0, lambda x: np.sign(x) * bump(np.abs(x), 1.0))
        u = velocity(w, spec).values
        ux = velocity_gradient(w, spec).values
        fd = fd4_derivative_values(u, w.domain.dx)
        inner = slice(N // 16, -N // 16)
        gaps.append(np.max(np.abs(ux[inner] - fd[inner])))
    assert gaps[1] <= 1e-4 * np.max(np.abs(ux))
    assert gaps[0] / gaps[1] >= 3.5


# ---------------------------------------------------------------------------
# cot-weighted form

def test_cot_weighted_zero():
    w = GridField.zeros(DomainConfig(L, 64))
    assert np.all(cot_weighted_velocity(w, 0.5) == 0.0)


def test_cot_weighted_matches_direct_route():
    w = sin_mode(2048)
    mu = np.pi / L
    n = 1024
    u = velocity_modified(w, 0.5).values[:n]
    c = cot_weighted_velocity(w, 0.5, L)
    assert np.max(np.abs(c - u / np.tan(mu * w.x[:n]))) <= 1e-6


def test_cot_weighted_bounded_near_zero():
    w = sin_mode(1024)
    c = cot_weighted_velocity(w, 0.5)
    # the limit at 0 is u_x(0) / mu, finite; the first samples approach it smoothly
    assert np.all(np.isfinite(c))
    assert abs(c[0] - c[1]) <= 1e-4 * abs(c[0])
    ux0 = velocity_gradient(w, KernelSpec("modifiedHL", a=0.5)).values
    assert c[0] == pytest.approx(-closed_factor(0.5) / np.pi * L, rel=1e-4)
    assert np.max(np.abs(ux0)) > 0


def test_cot_weighted_rejects_even_data():
    w = periodic(64, lambda x: np.cos(2 * np.pi * x))
    with pytest.raises(SymmetryError):
        cot_weighted_velocity(w, 0.5)


# ---------------------------------------------------------------------------
# invariants

SPECS = [KernelSpec(), KernelSpec("modifiedHL", a=0.2),
         KernelSpec("perturbed", f=cosine_perturbation(L, amplitude=0.5))]


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6), st.sampled_from(range(len(SPECS))))
def test_odd_in_odd_out(coeffs, which):
    mu = np.pi / L
    w = periodic(128, lambda x: sum(c * np.sin(2 * (k + 1) * mu * x) for k, c in enumerate(coeffs)))
    u = velocity(w, SPECS[which]).values
    if np.max(np.abs(u)) > 0:
        assert symmetry_defect(u, SymmetryClass.ODD) <= 1e-12


@given(st.floats(-3, 3), st.integers(0, 2**31 - 1), st.sampled_from(range(len(SPECS))))
def test_velocity_is_linear(alpha, seed, which):
    rng = np.random.default_rng(seed)
    d = DomainConfig(L, 64)
    w1 = rng.normal(size=64)
    w2 = rng.normal(size=64)
    w1 -= w1.mean()
    w2 -= w2.mean()
    spec = SPECS[which]
    lhs = velocity(GridField(d, alpha * w1 + w2), spec).values
    rhs = alpha * velocity(GridField(d, w1), spec).values + velocity(GridField(d, w2), spec).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1.0, abs(alpha)) * 10)


def test_negative_velocity_on_small_support():
    # omega >= 0 on [0, eps], odd; HL velocity is negative on (0, eps]
    f = zero_perturbation(L)
    eps = 0.5 * estimate_eps1(f, L)
    d = DomainConfig(L, 1024)
    x = make_grid(d)
    half = bump(x, eps)
    w = GridField(d, half - half[::-1])
    u = velocity_hl_spectral(w).values
    sel = (x > 0) & (x <= eps)
    assert np.all(u[sel] < 0)
