import numpy as np
import pytest

from houluo.errors import InvalidConfigError
from houluo.evolution import (BKM_STOP, T_MAX, StepControl, SystemState, adaptive_dt, advance,
                              rhs, run, step)
from houluo.grid import DomainConfig, GridField, make_grid
from houluo.kernels import KernelSpec
from houluo.scenarios import ScenarioSpec, build_sec3

L = 1.0
MU = np.pi / L


def state(N, w_fn, th_fn, spec=None):
    d = DomainConfig(L, N)
    x = make_grid(d)
    return SystemState(0.0, GridField(d, w_fn(x)), GridField(d, th_fn(x)), spec or KernelSpec())


def zero_state(N=64):
    return state(N, lambda x: 0 * x, lambda x: 0 * x)


def test_rhs_zero():
    dw, dth = rhs(zero_state())
    assert np.all(dw == 0) and np.all(dth == 0)


def test_rhs_pure_forcing():
    s = state(64, lambda x: 0 * x, lambda x: np.sin(MU * x) ** 2)
    dw, dth = rhs(s)
    np.testing.assert_allclose(dw, MU * np.sin(2 * MU * s.omega.x), atol=1e-12)
    np.testing.assert_allclose(dth, 0.0, atol=1e-15)


def test_rhs_constant_theta_is_stationary():
    s = state(64, lambda x: 0 * x, lambda x: 0 * x + 3.0)
    dw, dth = rhs(s)
    np.testing.assert_allclose(dw, 0.0, atol=1e-12)
    np.testing.assert_allclose(dth, 0.0, atol=1e-12)


def test_step_zero():
    s = step(zero_state(), 0.1)
    assert np.all(s.omega.values == 0) and np.all(s.theta.values == 0)
    assert s.t == pytest.approx(0.1)


def test_step_rejects_nonpositive_dt():
    with pytest.raises(InvalidConfigError):
        step(zero_state(), 0.0)


def test_one_step_taylor():
    dt = 1e-4
    s = state(64, lambda x: 0 * x, lambda x: np.sin(MU * x) ** 2)
    new = step(s, dt)
    np.testing.assert_allclose(new.omega.values, dt * MU * np.sin(2 * MU * s.omega.x), atol=1e-9)


def _smooth_state(spec):
    return state(128, lambda x: 0.5 * np.sin(2 * MU * x) + 0.2 * np.sin(4 * MU * x),
                 lambda x: np.sin(MU * x) ** 2, spec)


@pytest.mark.parametrize("spec", [KernelSpec(), KernelSpec("modifiedHL", a=0.1)])
def test_rk4_order(spec):
    T = 0.2
    finals = []
    for n in (10, 20, 40):
        s = _smooth_state(spec)
        for _ in range(n):
            s = advance(s, T / n)[0]
        finals.append(np.concatenate((s.omega.values, s.theta.values)))
    e1 = np.max(np.abs(finals[0] - finals[1]))
    e2 = np.max(np.abs(finals[1] - finals[2]))
    assert np.log2(e1 / e2) >= 3.8


def test_adaptive_dt_zero_velocity():
    ctl = StepControl(t_max=1.0)
    assert adaptive_dt(zero_state(), ctl) == 0.5
    ctl = StepControl(t_max=0.3)
    assert adaptive_dt(zero_state(), ctl) == pytest.approx(0.3)


def test_adaptive_dt_gradient_cap():
    s = zero_state()
    u = np.zeros(64)
    ux = np.full(64, 100.0)
    assert adaptive_dt(s, StepControl(t_max=10.0), u, ux) <= 5e-3


def test_step_control_validation():
    with pytest.raises(InvalidConfigError):
        StepControl(cfl=1.5)
    with pytest.raises(InvalidConfigError):
        StepControl(t_max=-1.0)
    with pytest.raises(InvalidConfigError):
        StepControl(scheme="leapfrog")


def test_run_zero_data_reaches_t_max():
    tr = run(zero_state(), StepControl(t_max=1.0))
    assert tr.reason == T_MAX
    assert tr.final.t == 1.0
    for s in tr.samples:
        assert s.I == 0 and s.J == 0 and s.bkm == 0 and s.max_ux == 0


def _sec3_state(N=256, amp=50.0):
    spec = ScenarioSpec("sec3", L, N, KernelSpec("modifiedHL", a=0.1), M=1.0, omega_amp=amp,
                        omega_offset=0.4, omega_width=0.1, theta_offset=0.05, theta_width=0.25)
    return build_sec3(spec)


def test_run_sec3_large_amplitude_stops_on_bkm():
    tr = run(_sec3_state(), StepControl(t_max=2.0, bkm_stop=3.0))
    assert tr.reason == BKM_STOP
    assert tr.final.t < 2.0
    bkm = tr.column("bkm")
    assert np.all(np.diff(bkm) >= 0)


def test_dt_follows_the_limits_along_a_blowup_run():
    s0 = _sec3_state()
    ctl = StepControl(t_max=2.0, bkm_stop=3.0)
    seen = []

    def sampler(st, bkm, u, ux, control):
        seen.append((float(np.max(np.abs(u))), float(np.max(np.abs(ux)))))
        return None

    tr = run(s0, ctl, sampler=sampler)
    dt = tr.step_log["dt"]
    umax, uxmax = np.array(seen[:dt.size]).T
    expect = np.minimum(ctl.cfl * s0.domain.dx / umax, 0.5 / np.maximum(1.0, uxmax))
    np.testing.assert_allclose(dt, expect, rtol=1e-12)
    assert dt[-1] < dt[0]


def test_diagnostics_are_passive():
    s0 = _sec3_state(128, 20.0)
    ctl = StepControl(t_max=0.05)
    a = run(s0, ctl, diag_every=2)
    b = run(s0, ctl, diag_every=1)
    np.testing.assert_array_equal(a.final.omega.values, b.final.omega.values)
    np.testing.assert_array_equal(a.final.theta.values, b.final.theta.values)
    n = b.steps
    assert len(b.samples) == n + 1
    assert len(a.samples) == 1 + (n + 1) // 2
    assert set(a.t) <= set(b.t)


def test_upwind_scheme_keeps_compact_support():
    N = 512
    d = DomainConfig(L, N)
    x = make_grid(d)
    from houluo.scenarios import bump, layer_profile
    w = bump(x, 0.1)
    w = w - w[::-1]
    th = layer_profile(np.minimum(x, L - x), 0.1, 1.0)
    s = SystemState(0.0, GridField(d, w), GridField(d, th), KernelSpec())
    tr = run(s, StepControl(t_max=0.05, scheme="upwind2"))
    wf = tr.final.omega.values
    outside = (x > 0.1 + 2 * d.dx) & (x < L - 0.1 - 2 * d.dx)
    assert np.all(wf[outside] == 0.0)
