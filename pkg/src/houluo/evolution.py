"""Time integration of omega_t + u omega_x = theta_x, theta_t + u theta_x = 0.

Classical RK4 in time. Spatial derivatives are pseudo-spectral with 2/3
dealiasing of the transport products (periodic) or fourth-order centred
(real line). A second-order upwind transport option keeps compactly
supported data compactly supported, which the pseudo-spectral scheme cannot.
After every step omega is projected onto odd and theta onto even functions,
and the pre-projection defects are logged.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .biot_savart import velocity_and_gradient
from .errors import InvalidConfigError, NumericalBlowupError
from .grid import (GridField, SymmetryClass, derivative_values, fd4_derivative_values,
                   interpolate_at_zero, symmetry_defect)
from .kernels import KernelSpec

SPECTRAL, UPWIND2 = "spectral", "upwind2"
SCHEMES = (SPECTRAL, UPWIND2)

T_MAX, BKM_STOP, DT_FLOOR, NAN = "t_max", "bkm-stop", "dt-floor", "nan"


@dataclass(frozen=True)
class SystemState:
    t: float
    omega: GridField
    theta: GridField
    spec: KernelSpec
    symmetric: bool = True  # omega odd and theta_x odd about x = 0

    def __post_init__(self):
        if self.omega.domain != self.theta.domain:
            raise InvalidConfigError("omega and theta live on different grids", "theta")
        if self.spec.geometry != self.omega.domain.mode:
            raise InvalidConfigError("kernel geometry does not match the grid", "spec")

    @property
    def domain(self):
        return self.omega.domain

    def with_fields(self, t, omega_values, theta_values) -> "SystemState":
        return SystemState(t, self.omega.with_values(omega_values),
                           self.theta.with_values(theta_values), self.spec, self.symmetric)

    def invariant_defects(self, theta_bound: float | None = None,
                          zero_method: str = "spectral") -> dict:
        """Relative defects of the state invariants (0 means exact)."""
        w, th = self.omega.values, self.theta.values
        tmax = float(np.max(np.abs(th), initial=0.0))
        bound = tmax if theta_bound is None else theta_bound
        out = {
            "theta_growth": max(0.0, tmax / bound - 1.0) if bound > 0 else 0.0,
            "theta_at_zero": abs(interpolate_at_zero(th, self.domain, zero_method)) / max(tmax, 1e-300) if tmax else 0.0,
        }
        if self.domain.periodic:
            out["mean_omega"] = abs(float(np.mean(w))) / max(1.0, float(np.max(np.abs(w), initial=0.0)))
        if self.symmetric:
            out["omega_odd"] = symmetry_defect(w, SymmetryClass.ODD)
            out["theta_even"] = symmetry_defect(th, SymmetryClass.EVEN)
        return out


@dataclass(frozen=True)
class StepControl:
    t_max: float = 1.0
    cfl: float = 0.4
    dt_min: float = 1e-10
    bkm_stop: float = 20.0
    dealias: float = 2.0 / 3.0
    scheme: str = SPECTRAL

    def __post_init__(self):
        for name in ("t_max", "cfl", "dt_min", "bkm_stop", "dealias"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidConfigError(f"must be positive and finite, got {v}", name)
        if self.cfl >= 1:
            raise InvalidConfigError("must be below 1", "cfl")
        if self.dealias > 1:
            raise InvalidConfigError("must lie in (0, 1]", "dealias")
        if self.scheme not in SCHEMES:
            raise InvalidConfigError(f"must be one of {SCHEMES}", "scheme")


def dealias_values(values: np.ndarray, fraction: float) -> np.ndarray:
    """Zero every rfft bin above fraction * N/2."""
    if fraction >= 1.0:
        return values
    v_hat = np.fft.rfft(values)
    cutoff = fraction * (values.size // 2)
    v_hat[np.arange(v_hat.size) > cutoff] = 0.0
    return np.fft.irfft(v_hat, n=values.size)


def _pad(v, periodic, k=2):
    if periodic:
        return np.concatenate((v[-k:], v, v[:k]))
    return np.concatenate((np.full(k, v[0]), v, np.full(k, v[-1])))


def upwind2_derivative(values: np.ndarray, u: np.ndarray, dx: float, periodic: bool) -> np.ndarray:
    """Second-order one-sided derivative taken from the upwind side of u."""
    p = _pad(values, periodic)
    c = p[2:-2]
    back = (3.0 * c - 4.0 * p[1:-3] + p[:-4]) / (2.0 * dx)
    fwd = (-3.0 * c + 4.0 * p[3:-1] - p[4:]) / (2.0 * dx)
    return np.where(u > 0, back, fwd)


def _edge_values(values, periodic):
    return (0.0, 0.0) if periodic else (values[0], values[-1])


def _rhs_arrays(w, th, state: SystemState, control: StepControl):
    d = state.domain
    om = GridField(d, w) if not np.shares_memory(w, state.omega.values) else state.omega
    u, _ = velocity_and_gradient(om, state.spec)
    l, r = _edge_values(th, d.periodic)
    if control.scheme == UPWIND2:
        wx = upwind2_derivative(w, u, d.dx, d.periodic)
        thx_up = upwind2_derivative(th, u, d.dx, d.periodic)
        forcing = fd4_derivative_values(th, d.dx, l, r) if not d.periodic else \
            _periodic_fd4(th, d.dx)
        return -u * wx + forcing, -u * thx_up
    wx = derivative_values(w, d, 0.0, 0.0)
    thx = derivative_values(th, d, l, r)
    if d.periodic:
        # 2/3 rule: truncate the factors, multiply, truncate the product
        f = control.dealias
        uf = dealias_values(u, f)
        return (dealias_values(-uf * dealias_values(wx, f), f) + thx,
                dealias_values(-uf * dealias_values(thx, f), f))
    return -u * wx + thx, -u * thx


def _periodic_fd4(v, dx):
    p = _pad(v, True)
    return (p[:-4] - 8.0 * p[1:-3] + 8.0 * p[3:-1] - p[4:]) / (12.0 * dx)


def rhs(state: SystemState, control: StepControl | None = None):
    """(d omega/dt, d theta/dt) as arrays."""
    control = control or StepControl()
    return _rhs_arrays(state.omega.values, state.theta.values, state, control)


@dataclass(frozen=True)
class StepInfo:
    mean_drift: float
    omega_defect: float
    theta_defect: float


def _rk4(state, dt, control):
    w0, th0 = state.omega.values, state.theta.values
    with np.errstate(all="ignore"):
        k1w, k1t = _rhs_arrays(w0, th0, state, control)
        k2w, k2t = _rhs_arrays(w0 + 0.5 * dt * k1w, th0 + 0.5 * dt * k1t, state, control)
        k3w, k3t = _rhs_arrays(w0 + 0.5 * dt * k2w, th0 + 0.5 * dt * k2t, state, control)
        k4w, k4t = _rhs_arrays(w0 + dt * k3w, th0 + dt * k3t, state, control)
        w = w0 + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        th = th0 + (dt / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
    return w, th


def _finite(*arrays):
    return all(np.all(np.isfinite(a)) for a in arrays)


def advance(state: SystemState, dt: float, control: StepControl | None = None):
    """One RK4 step (dt may be negative) followed by symmetry projection.

    Returns (new_state, StepInfo) with the pre-projection defects.
    """
    control = control or StepControl()
    try:
        w, th = _rk4(state, dt, control)
    except (FloatingPointError, ValueError) as exc:
        if isinstance(exc, InvalidConfigError) and _finite(state.omega.values, state.theta.values):
            raise
        raise NumericalBlowupError(f"step failed at t = {state.t}: {exc}") from exc
    if not _finite(w, th):
        raise NumericalBlowupError(f"non-finite field after step at t = {state.t}")
    d = state.domain
    wscale = max(1.0, float(np.max(np.abs(w))))
    drift = abs(float(np.mean(w))) / wscale if d.periodic else 0.0
    od = ed = 0.0
    if state.symmetric:
        od = symmetry_defect(w, SymmetryClass.ODD)
        ed = symmetry_defect(th, SymmetryClass.EVEN)
        w = 0.5 * (w - w[::-1])
        th = 0.5 * (th + th[::-1])
    if d.periodic:
        w = w - np.mean(w)
    return state.with_fields(state.t + dt, w, th), StepInfo(drift, od, ed)


def step(state: SystemState, dt: float, control: StepControl | None = None) -> SystemState:
    """Classical RK4 step of size dt > 0 with symmetry re-projection."""
    if not dt > 0:
        raise InvalidConfigError(f"must be positive, got {dt}", "dt")
    return advance(state, dt, control)[0]


def _dynamic_dt(max_u, max_ux, dx, control):
    cfl = control.cfl * dx / max_u if max_u > 0 else np.inf
    return min(cfl, 0.5 / max(1.0, max_ux))


def adaptive_dt(state: SystemState, control: StepControl, u=None, ux=None) -> float:
    """min(cfl dx / max|u|, 0.5 / max(1, max|u_x|), t_max - t)."""
    if u is None or ux is None:
        u, ux = velocity_and_gradient(state.omega, state.spec)
    dyn = _dynamic_dt(float(np.max(np.abs(u))), float(np.max(np.abs(ux))), state.domain.dx, control)
    return min(dyn, control.t_max - state.t)


@dataclass
class Trajectory:
    samples: list
    reason: str
    final: SystemState
    steps: int
    step_log: dict = field(default_factory=dict)
    message: str = ""

    @property
    def t(self):
        return np.array([s.t for s in self.samples])

    def column(self, name):
        return np.array([getattr(s, name) for s in self.samples])


def run(initial: SystemState, control: StepControl, diag_every: int = 1,
        sampler: Callable | None = None, max_steps: int | None = None) -> Trajectory:
    """Advance until t_max, bkm-stop, dt-floor or a non-finite field.

    ``sampler(state, bkm, u, ux)`` builds a diagnostics sample; the default
    is the standard one from the diagnostics module. Sampling never feeds
    back into the dynamics.
    """
    if diag_every < 1:
        raise InvalidConfigError("must be >= 1", "diag_every")
    if sampler is None:
        from .diagnostics import make_sample
        sampler = make_sample
    state = initial
    u, ux = velocity_and_gradient(state.omega, state.spec)
    max_ux = float(np.max(np.abs(ux)))
    bkm = 0.0
    samples = [sampler(state, bkm, u, ux, control)]
    theta0 = float(np.max(np.abs(state.theta.values)))
    log = {k: [] for k in ("t", "dt", "mean_drift", "omega_defect", "theta_defect",
                           "theta_max", "bkm")}
    n = 0
    reason, message = T_MAX, ""
    last_sampled = True
    while True:
        if state.t >= control.t_max:
            reason = T_MAX
            break
        if max_steps is not None and n >= max_steps:
            reason, message = T_MAX, "step budget exhausted"
            break
        dyn = _dynamic_dt(float(np.max(np.abs(u))), max_ux, state.domain.dx, control)
        if dyn < control.dt_min:
            reason, message = DT_FLOOR, f"dt = {dyn:.3e} below dt_min"
            break
        remaining = control.t_max - state.t
        final_step = dyn >= remaining
        dt = remaining if final_step else dyn
        try:
            new, info = advance(state, dt, control)
            if final_step:
                new = SystemState(control.t_max, new.omega, new.theta, new.spec, new.symmetric)
            u, ux = velocity_and_gradient(new.omega, new.spec)
            new_max = float(np.max(np.abs(ux)))
            if not np.isfinite(new_max):
                raise NumericalBlowupError("non-finite velocity gradient")
        except NumericalBlowupError as exc:
            reason, message = NAN, str(exc)
            break
        bkm += 0.5 * dt * (max_ux + new_max)
        max_ux = new_max
        state = new
        n += 1
        for k, v in (("t", state.t), ("dt", dt), ("mean_drift", info.mean_drift),
                     ("omega_defect", info.omega_defect), ("theta_defect", info.theta_defect),
                     ("theta_max", float(np.max(np.abs(state.theta.values)))), ("bkm", bkm)):
            log[k].append(v)
        last_sampled = n % diag_every == 0
        if last_sampled:
            samples.append(sampler(state, bkm, u, ux, control))
        if bkm >= control.bkm_stop:
            reason = BKM_STOP
            break
    if not last_sampled and reason != NAN:
        samples.append(sampler(state, bkm, u, ux, control))
    step_log = {k: np.array(v) for k, v in log.items()}
    step_log["theta0_max"] = theta0
    return Trajectory(samples, reason, state, n, step_log, message)
