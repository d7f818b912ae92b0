"""Blow-up functionals, inequality audits, the BKM integral, blow-up time
fits and the I'' = C I^2 comparator.

Periodic half-period integrals are evaluated with the exact integral of the
trigonometric interpolant over [0, L/2] (spectral accuracy on sub-intervals);
the integrands theta cot, theta omega cot and omega are smooth periodic
functions for data in the odd symmetry class. On the real line the midpoint
rule over x > 0 is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np

from .biot_savart import cot_weighted_velocity, velocity
from .errors import FitError, InvalidConfigError, UnorderedSamplesError
from .grid import GridField, derivative_values, interpolate_at_zero, make_grid, spectral_integral
from .kernels import MODIFIED

CSV_COLUMNS = ("t", "I", "J", "bkm", "max_ux", "max_omega", "mass_half", "supp_edge")
SUPPORT_FRACTION = 1e-12
AUDIT_TOL = 1e-6


@dataclass(frozen=True)
class DiagnosticsSample:
    t: float
    I: float
    J: float
    bkm: float
    max_ux: float
    max_omega: float
    mass_half: float
    supp_edge: float
    theta_max: float = float("nan")
    theta_at_zero: float = float("nan")
    mean_omega: float = float("nan")
    dI_dt: float = float("nan")
    dJ_dt: float = float("nan")
    max_u_eps: float = float("nan")

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


# ---------------------------------------------------------------------------
# half-range integrals


def _half_integral(values: np.ndarray, domain) -> float:
    if domain.periodic:
        return spectral_integral(values, domain.L, 0.0, domain.L / 2)
    n = domain.N // 2
    return float(domain.dx * np.sum(values[n:]))


def _weight(domain) -> np.ndarray:
    """cot(mu x) (periodic) or 1/x (real line) at the nodes."""
    x = make_grid(domain)
    if domain.periodic:
        return 1.0 / np.tan(domain.mu * x)
    return 1.0 / x


def compute_I(theta: GridField) -> float:
    """int_0^{L/2} theta(x) cot(mu x) dx."""
    d = theta.domain
    return _half_integral(theta.values * _weight(d), d)


def compute_J(theta: GridField, omega: GridField) -> float:
    """(2/pi) int_0^{L/2} theta omega cot(mu x) dx."""
    d = theta.domain
    return 2.0 / np.pi * _half_integral(theta.values * omega.values * _weight(d), d)


def mass_half(omega: GridField) -> float:
    d = omega.domain
    return _half_integral(omega.values, d)


def support_edge(omega: GridField) -> float:
    """Right-most node in (0, L/2) (or (0, X)) where |omega| exceeds 1e-12 max|omega|."""
    d = omega.domain
    v = np.abs(omega.values)
    scale = float(np.max(v, initial=0.0))
    if scale == 0.0:
        return 0.0
    n = d.N // 2
    x = make_grid(d)
    half = slice(0, n) if d.periodic else slice(n, d.N)
    xs, vs = x[half], v[half]
    hit = np.nonzero(vs > SUPPORT_FRACTION * scale)[0]
    return float(xs[hit[-1]]) if hit.size else 0.0


# ---------------------------------------------------------------------------
# samples


def _zero_method(control) -> str:
    # a one-sided scheme has no global interpolant; read theta(0) locally
    return "local" if control is not None and control.scheme == "upwind2" else "spectral"


def make_sampler(eps: float | None = None, rates: bool = True):
    """Build a sampler for evolution.run.

    ``rates`` adds dI/dt and dJ/dt evaluated from the semi-discrete right
    side; ``eps`` adds max u over the nodes of (0, eps].
    """
    from .evolution import rhs

    def sample(state, bkm, u, ux, control=None):
        d = state.domain
        th, w = state.theta, state.omega
        I = compute_I(th)
        J = compute_J(th, w)
        dI = dJ = float("nan")
        if rates:
            dw, dth = rhs(state, control)
            wt = _weight(d)
            dI = _half_integral(dth * wt, d)
            dJ = 2.0 / np.pi * _half_integral((dth * w.values + th.values * dw) * wt, d)
        mu_eps = float("nan")
        if eps is not None:
            x = make_grid(d)
            sel = (x > 0) & (x <= eps)
            mu_eps = float(np.max(u[sel])) if np.any(sel) else float("nan")
        return DiagnosticsSample(
            t=float(state.t), I=I, J=J, bkm=float(bkm),
            max_ux=float(np.max(np.abs(ux))), max_omega=float(np.max(np.abs(w.values))),
            mass_half=mass_half(w), supp_edge=support_edge(w),
            theta_max=float(np.max(np.abs(th.values))),
            theta_at_zero=interpolate_at_zero(th.values, d, _zero_method(control)),
            mean_omega=float(np.mean(w.values)), dI_dt=dI, dJ_dt=dJ, max_u_eps=mu_eps)
    return sample


make_sample = make_sampler()


# ---------------------------------------------------------------------------
# derivative of I: finite difference against the kernel formula


def dI_formula(state) -> float:
    """-(1/2pi) int theta_x int F omega cot dy dx for the modified law."""
    d = state.domain
    if state.spec.family != MODIFIED or not d.periodic:
        raise InvalidConfigError("the F-form of dI/dt needs the periodic modified kernel", "spec")
    n = d.N // 2
    ucot = cot_weighted_velocity(state.omega, state.spec.a)
    thx = derivative_values(state.theta.values, d)
    # theta_x odd, u cot even: extend the product oddly to the full period
    g = np.concatenate((thx[:n] * ucot, -(thx[:n] * ucot)[::-1]))
    return -spectral_integral(g, d.L, 0.0, d.L / 2)


def dI_single_route(state) -> float:
    """-int_0^{L/2} u theta_x cot(mu x) dx with u from the velocity law."""
    d = state.domain
    u = velocity(state.omega, state.spec).values
    thx = derivative_values(state.theta.values, d)
    return -_half_integral(u * thx * _weight(d), d)


class Consistency(NamedTuple):
    fd_value: float
    formula_value: float
    diff: float


def dI_consistency(state, dt: float = 1e-4, control=None) -> Consistency:
    """Centred difference of I over one RK4 step each way against the F formula."""
    from .evolution import advance
    fwd = advance(state, dt, control)[0]
    bwd = advance(state, -dt, control)[0]
    fd = (compute_I(fwd.theta) - compute_I(bwd.theta)) / (2.0 * dt)
    formula = dI_formula(state)
    return Consistency(fd, formula, abs(fd - formula))


def bracket_positivity(state, y: float) -> float:
    """B(y) = int_y^{L/2} omega(x) (u cot(mu x))_x dx."""
    d = state.domain
    if not d.periodic:
        raise InvalidConfigError("bracket_positivity needs a periodic state", "mode")
    if y >= d.L / 2:
        return 0.0
    if y < 0:
        raise InvalidConfigError("probe must lie in [0, L/2]", "y")
    u = velocity(state.omega, state.spec).values
    g = u * _weight(d)
    gx = derivative_values(g, d)
    return spectral_integral(state.omega.values * gx, d.L, y, d.L / 2)


# ---------------------------------------------------------------------------
# BKM integral and blow-up time


def _series(obj, name):
    if hasattr(obj, "samples"):
        obj = obj.samples
    if isinstance(obj, (list, tuple)) and obj and isinstance(obj[0], DiagnosticsSample):
        return np.array([getattr(s, name) for s in obj])
    return None


def bkm_accumulate(trajectory, max_ux=None) -> np.ndarray:
    """Trapezoid partial integrals of max|u_x| over the sample times.

    Accepts a Trajectory, a list of samples, or arrays (t, max_ux).
    """
    t = _series(trajectory, "t")
    if t is not None:
        g = _series(trajectory, "max_ux")
    else:
        t = np.asarray(trajectory, dtype=float)
        g = np.asarray(max_ux, dtype=float)
    if t.shape != g.shape:
        raise InvalidConfigError("times and values differ in length", "max_ux")
    if np.any(np.diff(t) < 0):
        raise UnorderedSamplesError("samples are not ordered in t")
    out = np.zeros_like(t)
    if t.size > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (g[1:] + g[:-1]))
    return out


class BlowupFit(NamedTuple):
    T_est: float
    fit_quality: float
    good: bool


FIT_QUALITY_MAX = 1e-3


def estimate_blowup_time(t, I) -> BlowupFit:
    """Fit I ~ c (T - t)^(-2) on the last quartile of the samples.

    Equivalent linear fit: I^(-1/2) = alpha - beta t, T = alpha / beta.
    fit_quality is the RMS residual of I^(-1/2) relative to its range over the
    window; ``good`` is False above 1e-3. Raises FitError when I is not
    increasing and convex on the window, which rules out the ansatz.
    """
    t = np.asarray(t, dtype=float)
    I = np.asarray(I, dtype=float)
    if t.size < 8 or t.shape != I.shape:
        raise FitError("need at least 8 (t, I) samples")
    k = max(4, t.size // 4)
    tw, Iw = t[-k:], I[-k:]
    if np.any(np.diff(tw) <= 0):
        raise UnorderedSamplesError("sample times must increase")
    if np.any(np.diff(Iw) <= 0) or np.any(Iw <= 0):
        raise FitError("I is not positive and increasing on the fit window")
    slopes = np.diff(Iw) / np.diff(tw)
    if np.any(np.diff(slopes) <= 1e-9 * np.abs(slopes[1:])):
        raise FitError("I is not convex on the fit window")
    y = Iw ** -0.5
    A = np.vstack((np.ones_like(tw), tw)).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    alpha, slope = coef
    if not slope < 0:
        raise FitError("I^(-1/2) does not decrease on the fit window")
    T = -alpha / slope
    resid = y - A @ coef
    span = float(np.max(y) - np.min(y))
    quality = float(np.sqrt(np.mean(resid ** 2)) / span) if span > 0 else float("inf")
    return BlowupFit(float(T), quality, quality < FIT_QUALITY_MAX)


# ---------------------------------------------------------------------------
# comparator ODE


@dataclass(frozen=True)
class OdeRun:
    """I' = C Q, Q' = I^2, I(0) = I0, Q(0) = 0, integrated until I > 1e12.

    T_blowup is the fitted divergence time; for the differential inequality
    I' >= C int_0^t I^2 it is an upper bound on the blow-up time.
    """

    C: float
    I0: float
    dt: float
    T_blowup: float
    fit_quality: float
    t: np.ndarray = field(repr=False)
    I: np.ndarray = field(repr=False)


def comparator_blowup_time(C: float, I0: float) -> float:
    """Closed form sqrt(3/(2 C I0)) * B(1/6, 1/2)/3 for I'' = C I^2, I'(0) = 0."""
    beta = math.gamma(1 / 6) * math.gamma(1 / 2) / math.gamma(2 / 3)
    return math.sqrt(1.5 / (C * I0)) * beta / 3.0


def ode_comparator(C: float, I0: float, dt: float = 1e-3, I_cap: float = 1e12) -> OdeRun:
    """RK4 on the equality system; the step is min(dt, 0.02 / sqrt(C I / 6))
    so the final approach to the singularity is resolved independently of dt."""
    for name, v in (("C", C), ("I0", I0), ("dt", dt)):
        if not (np.isfinite(v) and v > 0):
            raise InvalidConfigError(f"must be positive, got {v}", name)

    def f(I, Q):
        return C * Q, I * I

    t, I, Q = 0.0, float(I0), 0.0
    ts, Is = [t], [I]
    while I < I_cap:
        h = min(dt, 0.02 * math.sqrt(6.0 / (C * I)))
        a1, b1 = f(I, Q)
        a2, b2 = f(I + 0.5 * h * a1, Q + 0.5 * h * b1)
        a3, b3 = f(I + 0.5 * h * a2, Q + 0.5 * h * b2)
        a4, b4 = f(I + h * a3, Q + h * b3)
        I += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        Q += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
        t += h
        ts.append(t)
        Is.append(I)
    ts, Is = np.array(ts), np.array(Is)
    fit = estimate_blowup_time(ts, Is)
    return OdeRun(C, I0, dt, fit.T_est, fit.fit_quality, ts, Is)


# ---------------------------------------------------------------------------
# inequality audits


@dataclass
class AuditReport:
    t: np.ndarray
    margin_I: np.ndarray
    margin_J: np.ndarray
    scale_I: np.ndarray
    scale_J: np.ndarray
    tol: float = AUDIT_TOL

    @property
    def worst_I(self) -> float:
        return float(np.min(self.margin_I / self.scale_I)) if self.t.size else 0.0

    @property
    def worst_J(self) -> float:
        return float(np.min(self.margin_J / self.scale_J)) if self.t.size else 0.0

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margin_I >= -self.tol * self.scale_I)
                    and np.all(self.margin_J >= -self.tol * self.scale_J))

    def to_dict(self):
        return {"passed": self.passed, "worst_I": self.worst_I, "worst_J": self.worst_J,
                "samples": int(self.t.size)}


def _samples(trajectory):
    return trajectory.samples if hasattr(trajectory, "samples") else list(trajectory)


def perturbed_inequality_audit(trajectory, Cf: float, M: float, L: float) -> AuditReport:
    """Margins of dI/dt >= J - Cf M m and dJ/dt >= (2/L^2) I^2 - Cf M m^2,
    m = mass_half, each with scale max(1, |terms|)."""
    s = _samples(trajectory)
    t = np.array([x.t for x in s])
    I = np.array([x.I for x in s])
    J = np.array([x.J for x in s])
    m = np.array([x.mass_half for x in s])
    dI = np.array([x.dI_dt for x in s])
    dJ = np.array([x.dJ_dt for x in s])
    if np.any(np.isnan(dI)) or np.any(np.isnan(dJ)):
        raise InvalidConfigError("samples carry no rates; run with a rate sampler", "trajectory")
    lo_I = J - Cf * M * m
    lo_J = 2.0 / L ** 2 * I ** 2 - Cf * M * m ** 2
    sc_I = np.maximum.reduce([np.ones_like(t), np.abs(dI), np.abs(J), np.abs(Cf * M * m)])
    sc_J = np.maximum.reduce([np.ones_like(t), np.abs(dJ), 2.0 / L ** 2 * I ** 2,
                              np.abs(Cf * M * m ** 2)])
    return AuditReport(t, dI - lo_I, dJ - lo_J, sc_I, sc_J)


def modified_chain_audit(trajectory, C_a: float) -> AuditReport:
    """Margin of dI/dt >= (C(a)/pi) J along the samples (J-margin left empty)."""
    s = _samples(trajectory)
    t = np.array([x.t for x in s])
    dI = np.array([x.dI_dt for x in s])
    J = np.array([x.J for x in s])
    sc = np.maximum.reduce([np.ones_like(t), np.abs(dI), np.abs(C_a / np.pi * J)])
    zero = np.zeros_like(t)
    return AuditReport(t, dI - C_a / np.pi * J, zero, sc, np.ones_like(t))


def convexity_defect(t, I) -> float:
    """Most negative second divided difference of I, relative to max|I''| scale."""
    t = np.asarray(t, dtype=float)
    I = np.asarray(I, dtype=float)
    if t.size < 3:
        return 0.0
    s = np.diff(I) / np.diff(t)
    dd = np.diff(s) / (0.5 * (t[2:] - t[:-2]))
    scale = max(1.0, float(np.max(np.abs(dd))))
    return float(min(0.0, np.min(dd)) / scale)
