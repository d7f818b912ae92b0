"""Admissible initial data, perturbation validation and the smallness
constants (eps1, eps2, C(f), I(0) threshold) of the perturbed-kernel argument.

Profiles are built from the C-infinity bump

    B_c(x) = exp(1 - 1/(1 - ((2x - c)/c)^2))   on (0, c),   0 elsewhere,

with omega_0 = A_omega * B and theta_0 the normalised primitive of a bump,
so that theta_0 rises from 0 to exactly M across a layer of width c.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import (EpsTooLargeError, InvalidConfigError, PerturbationError,
                     ResolutionError, SupportViolationError)
from .grid import (PERIODIC, REALLINE, DomainConfig, GridField, SymmetryClass,
                   interpolate_at_zero, make_grid, symmetry_defect)
from .kernels import HL, MODIFIED, PERTURBED, KernelSpec

SEC3, SEC4, REALLINE_CLASS = "sec3", "sec4", "realline"
CLASSES = (SEC3, SEC4, REALLINE_CLASS)

VALIDATION_TOL = 1e-10


# ---------------------------------------------------------------------------
# perturbations


@dataclass(eq=False)
class PerturbationFn:
    """A validated perturbation f(x, y) of the HL kernel.

    ``L`` is the period (periodic geometry); real-line perturbations are
    supported in [-1, 1]^2. Norms are finite-difference estimates.
    """

    func: Callable
    geometry: str
    L: float
    name: str = "custom"
    params: dict = field(default_factory=dict)
    norm_c1: float = float("nan")
    norm_c2: float = float("nan")
    validated: bool = False
    _tables: dict = field(default_factory=dict, repr=False)

    def __call__(self, x, y):
        return self.func(x, y)

    def grid_table(self, domain: DomainConfig, width: int | None = None) -> np.ndarray:
        """f(x_i, y_j) on the grid nodes, computed once and cached read-only.

        With ``width`` only the columns of the first and last ``width``
        nodes are returned (the nodes nearest x = 0 on a periodic grid).
        """
        N = domain.N
        if width is not None and 2 * width >= N:
            width = None
        key = (N, domain.L, domain.mode, width)
        tab = self._tables.get(key)
        if tab is None:
            x = make_grid(domain)
            y = x if width is None else np.concatenate((x[:width], x[N - width:]))
            tab = np.array(self.func(x[:, None], y[None, :]), dtype=float)
            tab = np.broadcast_to(tab, (x.size, y.size)).copy()
            tab.flags.writeable = False
            self._tables[key] = tab
        return tab

    def odd_table(self, domain: DomainConfig, width: int) -> np.ndarray:
        """f(x_i, y_j) - f(x_i, -y_j) for the first N/2 nodes x_i and the first
        ``width`` nodes y_j: the kernel seen by odd data on a periodic grid."""
        width = min(int(width), domain.N // 2)
        key = ("odd", domain.N, domain.L, domain.mode, width)
        tab = self._tables.get(key)
        if tab is None:
            x = make_grid(domain)
            X = x[: domain.N // 2, None]
            Y = x[None, :width]
            tab = np.array(self.func(X, Y), dtype=float) - np.array(self.func(X, -Y), dtype=float)
            tab = np.broadcast_to(tab, (X.shape[0], width)).copy()
            tab.flags.writeable = False
            self._tables[key] = tab
        return tab

    def dx_table(self, x, y, step: float) -> np.ndarray:
        X = np.asarray(x)[:, None]
        Y = np.asarray(y)[None, :]
        return (self.func(X + step, Y) - self.func(X - step, Y)) / (2.0 * step)

    def describe(self) -> dict:
        return {"name": self.name, "geometry": self.geometry, "L": self.L,
                "params": dict(self.params), "norm_c1": self.norm_c1, "norm_c2": self.norm_c2}


def _derivative_sups(func, xs, ys, h):
    X = xs[:, None]
    Y = ys[None, :]
    f0 = func(X, Y)
    fx = (func(X + h, Y) - func(X - h, Y)) / (2 * h)
    fy = (func(X, Y + h) - func(X, Y - h)) / (2 * h)
    fxx = (func(X + h, Y) - 2 * f0 + func(X - h, Y)) / (h * h)
    fyy = (func(X, Y + h) - 2 * f0 + func(X, Y - h)) / (h * h)
    fxy = (func(X + h, Y + h) - func(X + h, Y - h) - func(X - h, Y + h)
           + func(X - h, Y - h)) / (4 * h * h)
    c1 = max(np.max(np.abs(f0)), np.max(np.abs(fx)), np.max(np.abs(fy)))
    c2 = max(c1, np.max(np.abs(fxx)), np.max(np.abs(fyy)), np.max(np.abs(fxy)))
    return float(c1), float(c2)


def validate_perturbation(func, geometry: str = PERIODIC, L: float = 1.0,
                          resolution: int = 256, name: str = "custom",
                          params: dict | None = None) -> PerturbationFn:
    """Check symmetry, periodicity (or support) and smoothness of f and
    estimate its C^1 and C^2 norms.

    Norms are estimated with centred differences at two resolutions; if the
    estimates disagree by more than 10 % the function is rejected as
    non-smooth. The reported norm is the finer estimate pushed up by its
    Richardson correction when that is larger.
    """
    if geometry not in (PERIODIC, REALLINE):
        raise InvalidConfigError(f"unknown geometry {geometry!r}", "geometry")
    n = int(resolution)
    if geometry == PERIODIC:
        xs = (np.arange(n) + 0.5) * (L / n)
    else:
        xs = (np.arange(n) + 0.5) * (4.0 / n) - 2.0
    X = xs[:, None]
    Y = xs[None, :]
    with np.errstate(all="ignore"):
        f0 = np.broadcast_to(np.asarray(func(X, Y), dtype=float), (n, n))
    if not np.all(np.isfinite(f0)):
        raise PerturbationError("non-smooth", "f is not finite on the validation grid")
    scale = max(1.0, float(np.max(np.abs(f0))))
    tol = VALIDATION_TOL * scale
    sym = np.max(np.abs(f0 - func(-X, -Y)))
    if sym > tol:
        raise PerturbationError("symmetry-violation",
                                f"max |f(x,y) - f(-x,-y)| = {sym:.3e}")
    if geometry == PERIODIC:
        per = max(np.max(np.abs(f0 - func(X + L, Y))), np.max(np.abs(f0 - func(X, Y + L))))
        if per > tol:
            raise PerturbationError("periodicity-violation",
                                    f"max periodicity defect {per:.3e} for period {L}")
        span = L
    else:
        outside = (np.abs(X) >= 1.0) | (np.abs(Y) >= 1.0)
        leak = np.max(np.where(outside, np.abs(f0), 0.0))
        if leak > tol:
            raise PerturbationError("support-violation",
                                    f"f is {leak:.3e} outside [-1, 1]^2")
        span = 4.0
    coarse = _derivative_sups(func, xs, xs, span / n)
    xs2 = (np.arange(2 * n) + 0.5) * (span / (2 * n)) + (0.0 if geometry == PERIODIC else -2.0)
    fine = _derivative_sups(func, xs2, xs2, span / (2 * n))
    for c, f_, label in ((coarse[0], fine[0], "C1"), (coarse[1], fine[1], "C2")):
        if abs(f_ - c) > 0.1 * max(f_, c, 1e-300):
            raise PerturbationError("non-smooth",
                                    f"{label} norm estimate moves from {c:.4g} to {f_:.4g} under refinement")
    c1 = max(fine[0], (4 * fine[0] - coarse[0]) / 3)
    c2 = max(fine[1], (4 * fine[1] - coarse[1]) / 3)
    return PerturbationFn(func=func, geometry=geometry, L=float(L), name=name,
                          params=dict(params or {}), norm_c1=c1, norm_c2=c2, validated=True)


def zero_perturbation(L: float = 1.0, geometry: str = PERIODIC) -> PerturbationFn:
    def f(x, y):
        return np.zeros(np.broadcast(x, y).shape)
    p = validate_perturbation(f, geometry, L, name="zero")
    p.norm_c1 = p.norm_c2 = 0.0
    return p


def cosine_perturbation(L: float = 1.0, amplitude: float = 1.0, mode: int = 1,
                        c1_norm: float | None = None) -> PerturbationFn:
    """f = c cos(2 k mu (x - y)); ``c1_norm`` rescales c so that ||f||_C1 equals it."""
    mu = np.pi / L
    k = 2.0 * mode * mu
    c = amplitude if c1_norm is None else c1_norm / max(1.0, k)

    def f(x, y):
        return c * np.cos(k * (x - y))
    return validate_perturbation(f, PERIODIC, L, name="cosine",
                                 params={"amplitude": c, "mode": mode})


def modified_kernel_perturbation(L: float, a: float) -> PerturbationFn:
    """f = -log sqrt(sin^2 mu(x - y) + a): turns the HL law into the modified law."""
    mu = np.pi / L

    def f(x, y):
        return -0.5 * np.log(np.sin(mu * (x - y)) ** 2 + a)
    return validate_perturbation(f, PERIODIC, L, name="modified", params={"a": a})


def bump_perturbation(amplitude: float = 1.0) -> PerturbationFn:
    """f = A b(x) b(y) with the unit bump b supported in [-1, 1]."""
    def b(t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < 1.0
        r = np.where(inside, t, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - r * r)), 0.0)

    def f(x, y):
        return amplitude * b(x) * b(y)
    return validate_perturbation(f, REALLINE, 1.0, name="bump", params={"amplitude": amplitude})


def h_function(f, x, y, L):
    """h(x, y) = cot(mu x) (f(x, y) - f(x, -y))."""
    mu = np.pi / L
    return (f(x, y) - f(x, -y)) / np.tan(mu * x)


def estimate_Cf(f: PerturbationFn, L: float | None = None, resolution: int = 256) -> float:
    """max(|h|, |dh/dx|) over the staggered grid of (0, L/2)^2."""
    L = f.L if L is None else L
    if f.norm_c1 == 0.0:
        return 0.0
    n = int(resolution)
    dx = 0.5 * L / n
    xs = (np.arange(n) + 0.5) * dx
    X = xs[:, None]
    Y = xs[None, :]
    step = dx / 4
    h0 = h_function(f, X, Y, L)
    hx = (h_function(f, X + step, Y, L) - h_function(f, X - step, Y, L)) / (2 * step)
    return float(max(np.max(np.abs(h0)), np.max(np.abs(hx))))


def _bisect_largest(cond, cap: float, floor: float, rel: float = 1e-3) -> float:
    """Largest eps in [floor, cap] with cond(eps) true, assuming the admissible
    set is an interval starting at 0: geometric descent, then bisection."""
    if cond(cap):
        return cap
    hi = cap
    lo = cap / 2
    while not cond(lo):
        hi = lo
        lo /= 2
        if lo < floor:
            return floor
    while (hi - lo) > rel * lo:
        mid = 0.5 * (lo + hi)
        if cond(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _eps1_condition(norm_c1, L, n):
    mu = np.pi / L

    def cond(eps):
        xs = (np.arange(n) + 0.5) * (eps / n)
        X = xs[:, None]
        Y = xs[None, :]
        tx, ty = np.tan(mu * X), np.tan(mu * Y)
        off = X != Y
        with np.errstate(divide="ignore"):
            bracket = np.log(np.abs((tx - ty) / (tx + ty))) + 2.0 * np.minimum(X, Y) * norm_c1
        return bool(np.all(bracket[off] < 0))
    return cond


def estimate_eps1(f: PerturbationFn, L: float | None = None, resolution: int = 200,
                  cap: float | None = None) -> float:
    """Support radius below which the HL bracket dominates the perturbation.

    Scans log|(tan mu x - tan mu y)/(tan mu x + tan mu y)| + 2 min(x, y) ||f||_C1 < 0
    over 0 < x, y <= eps. The min(x, y) factor is the mean-value bound for
    f(x, y) - f(x, -y), which vanishes both at y = 0 and (by the symmetry
    f(x, y) = f(-x, -y)) at x = 0.
    """
    L = f.L if L is None else L
    cap = L / 4 if cap is None else cap
    if not f.norm_c1 > 0:
        return cap
    return _bisect_largest(_eps1_condition(f.norm_c1, L, resolution), cap, 1e-6 * L)


def estimate_eps2(f: PerturbationFn, L: float | None = None, resolution: int = 200,
                  cap: float | None = None) -> float:
    """Largest eps with min(mu, 1) cot(mu (x + y)) > 2 ||f||_C1 on (0, eps]^2.

    The min(mu, 1) factor makes the bound hold both with and without the mu
    produced by differentiating log|sin mu(x + y)|.
    """
    L = f.L if L is None else L
    cap = L / 4 if cap is None else cap
    if not f.norm_c1 > 0:
        return cap
    mu = np.pi / L
    n = resolution

    def cond(eps):
        xs = (np.arange(n) + 0.5) * (eps / n)
        s = xs[:, None] + xs[None, :]
        return bool(np.all(min(mu, 1.0) / np.tan(mu * s) > 2.0 * f.norm_c1))
    return _bisect_largest(cond, cap, 1e-6 * L)


def required_I0(f: PerturbationFn | None, M: float, L: float, Cf: float | None = None) -> float:
    """I(0) threshold C M^2 (1/2 + M/12) + L sqrt(c M^2 + C M^3 / 3), with c = C = Cf."""
    if Cf is None:
        Cf = 0.0 if f is None else estimate_Cf(f, L)
    return Cf * M * M * (0.5 + M / 12.0) + L * math.sqrt(Cf * M * M + Cf * M ** 3 / 3.0)


BETA_16_12 = math.gamma(1 / 6) * math.gamma(1 / 2) / math.gamma(2 / 3)


def comparator_I0(C: float, t_target: float) -> float:
    """Smallest I(0) for which I'' = C I^2 (I'(0) = 0) diverges by t_target."""
    return 3.0 / (2.0 * C) * (BETA_16_12 / 3.0 / t_target) ** 2


# ---------------------------------------------------------------------------
# profiles


def bump(x, c):
    """C-infinity bump on (0, c) with peak 1 at c/2."""
    x = np.asarray(x, dtype=float)
    r = (2.0 * x - c) / c
    inside = (x > 0) & (x < c)
    r = np.where(inside, r, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - r * r)), 0.0)


_BUMP_MASS = integrate.quad(lambda r: math.exp(1.0 - 1.0 / (1.0 - r * r)), -1.0, 1.0,
                            epsabs=0.0, epsrel=1e-13, limit=200)[0]


def bump_mass(c: float) -> float:
    """Integral of the bump over its support, (c/2) * int_{-1}^{1} e^{1 - 1/(1-r^2)} dr."""
    return 0.5 * c * _BUMP_MASS


def layer_profile(x, c, M):
    """M times the normalised primitive of the bump: 0 at x <= 0, M at x >= c."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= c, M, 0.0)
    inner = (x > 0) & (x < c)
    if np.any(inner):
        t, w = np.polynomial.legendre.leggauss(24)
        xi = x[inner]
        # integrate on [0, x] mapped onto the Gauss-Legendre nodes, in 8 panels
        panels = 8
        acc = np.zeros_like(xi)
        for p in range(panels):
            a0 = xi * p / panels
            a1 = xi * (p + 1) / panels
            nodes = 0.5 * (a0 + a1)[:, None] + 0.5 * (a1 - a0)[:, None] * t[None, :]
            acc += 0.5 * (a1 - a0) * np.sum(w * bump(nodes, c), axis=1)
        out[inner] = M * np.minimum(acc / bump_mass(c), 1.0)
    return out


# ---------------------------------------------------------------------------
# scenario specs and builders


@dataclass(frozen=True)
class ScenarioSpec:
    """Initial-data recipe.

    ``L`` is the period (sec3/sec4) or half-width X (realline). The omega
    bump occupies [omega_offset, omega_offset + omega_width] and the theta
    layer [theta_offset, theta_offset + theta_width] on the positive
    half-line; ``None`` widths pick the class default (sec3: the rest of
    (0, L/2) for omega and L/4 for theta, sec4: eps, realline: 1).
    """

    cls: str
    L: float
    N: int
    kernel: KernelSpec = field(default_factory=KernelSpec)
    M: float = 1.0
    eps: float | None = None
    omega_amp: float = 1.0
    omega_width: float | None = None
    theta_width: float | None = None
    omega_offset: float = 0.0
    theta_offset: float = 0.0
    auto_amplitude: bool = False
    I0_target: float | None = None
    blowup_by: float | None = None

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise InvalidConfigError(f"unknown class {self.cls!r}", "cls")
        if not self.M >= 0:
            raise InvalidConfigError("M must be non-negative", "M")
        if self.omega_offset < 0 or self.theta_offset < 0:
            raise InvalidConfigError("offsets must be non-negative", "omega_offset")
        if self.omega_amp < 0:
            raise InvalidConfigError("omega_amp must be non-negative", "omega_amp")
        geom = REALLINE if self.cls == REALLINE_CLASS else PERIODIC
        if self.kernel.geometry != geom:
            raise InvalidConfigError(f"{self.cls} needs a {geom} kernel", "kernel")
        if self.cls == SEC4 and self.eps is None:
            raise InvalidConfigError("sec4 data needs eps", "eps")

    @property
    def domain(self) -> DomainConfig:
        mode = REALLINE if self.cls == REALLINE_CLASS else PERIODIC
        return DomainConfig(self.L, self.N, mode)


def _assemble_periodic(domain, omega_half, theta_half):
    n = domain.N // 2
    omega = np.concatenate((omega_half[:n], -omega_half[:n][::-1]))
    theta = np.concatenate((theta_half[:n], theta_half[:n][::-1]))
    return omega, theta


def class_violations(omega: GridField, theta: GridField, M: float,
                     eps: float | None = None) -> list[str]:
    """Names of the admissibility conditions the sampled data violates."""
    d = omega.domain
    w, th = omega.values, theta.values
    out = []
    scale = max(1.0, np.max(np.abs(w)))
    if symmetry_defect(w, SymmetryClass.ODD) > 1e-12:
        out.append("omega odd")
    if symmetry_defect(th, SymmetryClass.EVEN) > 1e-12:
        out.append("theta_x odd")
    x = make_grid(d)
    half = (x > 0) & (x < (d.L / 2 if d.periodic else d.L))
    if np.any(w[half] < 0):
        out.append("omega >= 0 on the half line")
    dth = np.diff(th[half])
    if np.any(dth < -1e-14 * max(1.0, M)):
        out.append("theta_x >= 0 on the half line")
    # theta even and non-decreasing in |x|: 0 <= theta(0) <= theta(dx/2), so the
    # nearest node bounds theta(0) without an interpolant that rings on steep layers
    near = th[0] if d.periodic else th[d.N // 2]
    if abs(near) > 1e-8 * max(1.0, M):
        out.append("theta(0) = 0")
    if np.max(np.abs(th)) > M * (1 + 1e-14) + 1e-300:
        out.append("||theta||_inf <= M")
    if d.periodic and abs(np.mean(w)) > 1e-14 * scale:
        out.append("mean-zero omega")
    if eps is not None:
        outside = half & (x > eps)
        if np.any(w[outside] != 0) or np.any(np.abs(th[outside] - M) > 0):
            out.append("support in [0, eps]")
    return out


def _compress_to_target(domain, x_half, c, M, target, build_I):
    """Halve the theta layer width until I(theta_0) reaches the target."""
    guard = 8.0 * domain.dx
    while True:
        theta_half = layer_profile(x_half, c, M)
        I0 = build_I(theta_half)
        if I0 >= target:
            return theta_half, c, I0
        if c / 2 < guard:
            raise ResolutionError(
                f"I(0) = {I0:.4g} below target {target:.4g} with the layer at the "
                f"resolution guard (width {c:.3g} < 8 dx); raise N")
        c /= 2


def _periodic_I(domain):
    from .diagnostics import compute_I

    def f(theta_half):
        _, th = _assemble_periodic(domain, np.zeros_like(theta_half), theta_half)
        return compute_I(GridField(domain, th))
    return f


def _make_state(spec, domain, omega, theta):
    from .evolution import SystemState
    return SystemState(0.0, GridField(domain, omega), GridField(domain, theta), spec.kernel)


def sec3_chain_constant(spec: ScenarioSpec) -> float:
    """Constant C in I'' >= C I^2 implied by the audited inequality chain.

    HL: I' >= J and J' >= (2/L^2) I^2 give C = 2/L^2. Modified kernel:
    I' >= (C(a)/4) J with C(a) the scanned F-sign constant.
    """
    L = spec.L
    if spec.kernel.family == MODIFIED:
        from .lemma_lab import scan_F_sign
        Ca = scan_F_sign(spec.kernel.a, L, 200, refine=False).estimated_constant
        return 2.0 / L ** 2 * Ca / 4.0
    return 2.0 / L ** 2


def _span(offset, width, default_width, upper):
    width = default_width if width is None else width
    if not (width > 0 and offset + width <= upper * (1 + 1e-12)):
        raise InvalidConfigError(f"profile [{offset}, {offset + width}] leaves (0, {upper}]",
                                 "omega_width")
    return offset, width


def build_sec3(spec: ScenarioSpec):
    """Odd, periodic, sign-definite data with theta_0(0) = 0 and max theta_0 = M.

    With ``auto_amplitude`` the data are rescaled along the symmetry
    (theta, omega, t) -> (lam^2 theta, lam omega, t / lam) of the system
    until I(0) reaches ``I0_target`` (default: the comparator threshold for
    blow-up before ``blowup_by``). The profile shapes, and so the resolution
    demands of the run, are unchanged; the effective M becomes lam^2 M.
    """
    if spec.cls != SEC3:
        raise InvalidConfigError("build_sec3 needs a sec3 spec", "cls")
    if spec.kernel.family == PERTURBED:
        raise InvalidConfigError("sec3 data uses the HL or modified kernel", "kernel")
    d = spec.domain
    x_half = make_grid(d)[: d.N // 2]
    wo, cw = _span(spec.omega_offset, spec.omega_width, d.L / 2 - spec.omega_offset, d.L / 2)
    to, ct = _span(spec.theta_offset, spec.theta_width, d.L / 4, d.L / 2)
    omega_half = spec.omega_amp * bump(x_half - wo, cw)
    theta_half = layer_profile(x_half - to, ct, spec.M)
    M = spec.M
    if spec.auto_amplitude and spec.M > 0:
        target = spec.I0_target
        if target is None:
            t_target = spec.blowup_by if spec.blowup_by is not None else 1.0
            target = comparator_I0(sec3_chain_constant(spec), t_target)
        I_base = _periodic_I(d)(theta_half)
        if not I_base > 0:
            raise InvalidConfigError("theta profile has no weight on the half period", "M")
        lam2 = max(1.0, target / I_base)
        theta_half = lam2 * theta_half
        omega_half = math.sqrt(lam2) * omega_half
        M = lam2 * spec.M
    omega, theta = _assemble_periodic(d, omega_half, theta_half)
    state = _make_state(spec, d, omega, theta)
    bad = class_violations(state.omega, state.theta, M)
    if bad:
        raise InvalidConfigError("initial data violates: " + ", ".join(bad), "scenario")
    return state


def build_sec4(spec: ScenarioSpec, f: PerturbationFn | None = None):
    """Data supported in [0, eps] for the perturbed law. Returns (state, I0).

    eps must not exceed min(eps1, eps2). With ``auto_amplitude`` the theta
    layer is compressed until I(0) reaches the required threshold.
    """
    if spec.cls != SEC4:
        raise InvalidConfigError("build_sec4 needs a sec4 spec", "cls")
    if f is None:
        f = spec.kernel.f if spec.kernel.family == PERTURBED else zero_perturbation(spec.L)
    d = spec.domain
    eps = spec.eps
    e1 = estimate_eps1(f, d.L)
    e2 = estimate_eps2(f, d.L)
    if not 0 < eps <= min(e1, e2):
        raise EpsTooLargeError(
            f"eps = {eps:.4g} exceeds min(eps1, eps2) = min({e1:.4g}, {e2:.4g}); "
            "u < 0 on (0, eps] and the mass bound are not guaranteed")
    x_half = make_grid(d)[: d.N // 2]
    cw = eps if spec.omega_width is None else spec.omega_width
    ct = eps if spec.theta_width is None else spec.theta_width
    if not (0 < cw <= eps and 0 < ct <= eps):
        raise InvalidConfigError("widths must lie in (0, eps]", "omega_width")
    omega_half = spec.omega_amp * bump(x_half, cw)
    build_I = _periodic_I(d)
    if spec.auto_amplitude and spec.M > 0:
        target = spec.I0_target
        if target is None:
            target = required_I0(f, spec.M, d.L)
        theta_half, ct, _ = _compress_to_target(d, x_half, ct, spec.M, target, build_I)
    else:
        theta_half = layer_profile(x_half, ct, spec.M)
    omega, theta = _assemble_periodic(d, omega_half, theta_half)
    state = _make_state(spec, d, omega, theta)
    bad = class_violations(state.omega, state.theta, spec.M, eps=eps)
    if "support in [0, eps]" in bad:
        raise SupportViolationError("discretised data leaks outside [0, eps]")
    if bad:
        raise InvalidConfigError("initial data violates: " + ", ".join(bad), "scenario")
    from .diagnostics import compute_I
    return state, compute_I(state.theta)


def build_realline(spec: ScenarioSpec):
    """Odd omega_0 and even theta_0 on [-X, X] with theta_x, omega supported in [-1, 1]."""
    if spec.cls != REALLINE_CLASS:
        raise InvalidConfigError("build_realline needs a realline spec", "cls")
    d = spec.domain
    if d.L <= 1.0 + 4 * d.dx:
        raise InvalidConfigError("half-width X must exceed 1 by a few cells", "L")
    x = make_grid(d)
    cw = 1.0 if spec.omega_width is None else spec.omega_width
    ct = 1.0 if spec.theta_width is None else spec.theta_width
    if not (0 < cw <= 1.0 and 0 < ct <= 1.0):
        raise InvalidConfigError("widths must lie in (0, 1]", "omega_width")
    ax = np.abs(x)
    omega = np.sign(x) * spec.omega_amp * bump(ax, cw)
    theta = layer_profile(ax, ct, spec.M)
    state = _make_state(spec, d, omega, theta)
    bad = class_violations(state.omega, state.theta, spec.M)
    if bad:
        raise InvalidConfigError("initial data violates: " + ", ".join(bad), "scenario")
    return state


def build_state(spec: ScenarioSpec):
    """Dispatch on the scenario class; returns (state, I0)."""
    from .diagnostics import compute_I
    if spec.cls == SEC3:
        s = build_sec3(spec)
        return s, compute_I(s.theta)
    if spec.cls == SEC4:
        return build_sec4(spec)
    s = build_realline(spec)
    return s, compute_I(s.theta)
