"""Velocity reconstruction u = K * omega for every supported kernel.

Periodic laws use Fourier multipliers for the log-singular part. The smooth
parts (modified correction, perturbations) can also be applied by direct
midpoint quadrature, which gives an independent route for cross-checks.
The real-line law uses product integration: exact cell integrals of
log|x - y| against a piecewise-constant omega.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from . import _backend
from .errors import (InvalidConfigError, MeanNotZeroError, PerturbationError,
                     SupportOverflowError, SymmetryError)
from .grid import (GridField, SymmetryClass, derivative_values, fd4_derivative_values,
                   make_grid, spectral_derivative_values, symmetry_defect)
from .kernels import HL, MODIFIED, PERTURBED, KernelSpec

MEAN_TOL = 1e-12
SUPPORT_TOL = 1e-13
ODD_FOLD_TOL = 1e-14


# ---------------------------------------------------------------------------
# periodic multipliers


def hl_multiplier(N: int, L: float) -> np.ndarray:
    """rfft-bin multiplier of the periodic HL law; Nyquist bin zeroed."""
    n = np.arange(N // 2 + 1, dtype=float)
    m = np.empty_like(n)
    m[0] = -L * np.log(2.0) / np.pi
    m[1:] = -L / (2.0 * np.pi * n[1:])
    m[-1] = 0.0
    return m


def layer_beta(a: float) -> float:
    """beta with cosh(beta) = 1 + 2a, i.e. beta = 2 asinh(sqrt(a))."""
    return 2.0 * np.arcsinh(np.sqrt(a))


def modified_multiplier(N: int, L: float, a: float) -> np.ndarray:
    """Exact multiplier of the modified law: HL times (1 - exp(-|n| beta))."""
    beta = layer_beta(a)
    n = np.arange(N // 2 + 1, dtype=float)
    m = hl_multiplier(N, L)
    m[1:] *= -np.expm1(-n[1:] * beta)
    # zero mode: mean of the full kernel over a period
    m[0] = -L * beta / (2.0 * np.pi)
    m[-1] = 0.0
    return m


def _check_mean(omega: GridField):
    v = omega.values
    if abs(np.mean(v)) > MEAN_TOL * np.max(np.abs(v), initial=0.0):
        raise MeanNotZeroError(
            f"periodic velocity needs mean-zero vorticity (mean = {np.mean(v):.3e})")


def _check_periodic(omega: GridField):
    if not omega.domain.periodic:
        raise InvalidConfigError("periodic velocity law needs a periodic grid", "mode")


def _apply_multiplier(values: np.ndarray, mult: np.ndarray) -> np.ndarray:
    return np.fft.irfft(np.fft.rfft(values) * mult, n=values.size)


def velocity_hl_spectral(omega: GridField) -> GridField:
    """Periodic HL velocity through the multiplier -L/(2 pi |n|)."""
    _check_periodic(omega)
    _check_mean(omega)
    d = omega.domain
    return omega.with_values(_apply_multiplier(omega.values, hl_multiplier(d.N, d.L)))


@lru_cache(maxsize=32)
def _correction_kernel_hat(N: int, L: float, a: float) -> np.ndarray:
    z = np.arange(N) * (L / N)
    k = -np.log(np.sin(np.pi / L * z) ** 2 + a) / (2.0 * np.pi)
    return np.fft.rfft(k) * (L / N)


def velocity_modified(omega: GridField, a: float, route: str = "multiplier") -> GridField:
    """Velocity of the modified kernel.

    ``route="multiplier"`` applies the exact trigonometric multiplier;
    ``route="quadrature"`` adds to the HL multiplier a midpoint-rule
    circular convolution with the smooth correction -(1/2pi) log(sin^2 + a).
    The two agree spectrally for smooth omega.
    """
    if not a > 0:
        raise InvalidConfigError(f"a must be positive, got {a}", "a")
    _check_periodic(omega)
    _check_mean(omega)
    d = omega.domain
    if route == "multiplier":
        return omega.with_values(_apply_multiplier(omega.values, modified_multiplier(d.N, d.L, a)))
    if route == "quadrature":
        w_hat = np.fft.rfft(omega.values)
        u_hat = w_hat * hl_multiplier(d.N, d.L) + w_hat * _correction_kernel_hat(d.N, d.L, float(a))
        return omega.with_values(np.fft.irfft(u_hat, n=d.N))
    raise InvalidConfigError(f"unknown route {route!r}", "route")


def _perturbation_table(f, domain, width=None) -> np.ndarray:
    if not getattr(f, "validated", False):
        raise PerturbationError("f-invalid", "perturbation has not been validated")
    return f.grid_table(domain, width) if width is not None else f.grid_table(domain)


def _support_window(values: np.ndarray) -> int | None:
    """Smallest power-of-two w (>= 64) such that values vanish outside the
    first and last w nodes, or None when no such w < N/2 exists."""
    N = values.size
    nz = np.flatnonzero(values)
    if nz.size == 0:
        return 64 if 128 < N else None
    lo = nz[nz < N // 2]
    hi = nz[nz >= N // 2]
    need = max(lo.max() + 1 if lo.size else 0, N - hi.min() if hi.size else 0)
    w = 64
    while w < need:
        w *= 2
    return w if 2 * w < N else None


def velocity_perturbed(omega: GridField, f) -> GridField:
    """u_HL + (1/pi) * midpoint sum of f(x_i, y_j) omega_j."""
    _check_periodic(omega)
    if getattr(f, "geometry", None) != "periodic":
        raise PerturbationError("f-invalid", "periodic run needs a periodic perturbation")
    u = velocity_hl_spectral(omega).values
    w = omega.values
    width = _support_window(w)
    if symmetry_defect(w, SymmetryClass.ODD) <= ODD_FOLD_TOL:
        # odd up to rounding: fold the y-integral onto y > 0 and fill u by
        # oddness; the dropped even residual is below ODD_FOLD_TOL relative
        n = w.size // 2
        k = n if width is None else width
        wo = 0.5 * (w[:k] - w[::-1][:k])
        half = (omega.domain.dx / np.pi) * (f.odd_table(omega.domain, k) @ wo)
        u = u + np.concatenate((half, -half[::-1]))
        return omega.with_values(u)
    table = _perturbation_table(f, omega.domain, width)
    if width is not None:
        # omega vanishes on the skipped columns; the product is unchanged
        w = np.concatenate((w[:width], w[w.size - width:]))
    u = u + (omega.domain.dx / np.pi) * (table @ w)
    return omega.with_values(u)


# ---------------------------------------------------------------------------
# real line


def _log_antiderivative(z):
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = z * np.log(np.abs(z)) - z
    return np.where(z == 0.0, 0.0, out)


@lru_cache(maxsize=16)
def log_cell_weights(N: int, dx: float) -> np.ndarray:
    """W_m = integral of log|z| over the cell centred at m*dx, m = -(N-1)..N-1."""
    m = np.arange(-(N - 1), N, dtype=float)
    return _log_antiderivative((m + 0.5) * dx) - _log_antiderivative((m - 0.5) * dx)


@lru_cache(maxsize=16)
def hilbert_cell_weights(N: int) -> np.ndarray:
    """Principal-value cell integrals of 1/z (in units where dx = 1)."""
    m = np.arange(-(N - 1), N, dtype=float)
    with np.errstate(divide="ignore"):
        w = np.log(np.abs((m + 0.5) / (m - 0.5)))
    w[N - 1] = 0.0
    return w


@lru_cache(maxsize=16)
def hilbert_slope_weights(N: int) -> np.ndarray:
    """Cell integrals of (y - y_j)/(x - y) in units of dx^2: the part of the
    Hilbert sum carried by the slope of omega inside each cell. Without it
    the piecewise-constant rule is only first order (the self cell alone
    contributes -dx omega')."""
    m = np.arange(-(N - 1), N, dtype=float)
    return m * hilbert_cell_weights(N) - 1.0


def _toeplitz_apply(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    N = values.size
    full = fftconvolve(values, weights)
    return full[N - 1:2 * N - 1]


def _check_support(omega: GridField):
    v = np.abs(omega.values)
    scale = np.max(v, initial=0.0)
    if scale == 0.0:
        return
    edge = np.concatenate((v[:2], v[-2:]))
    if np.any(edge > SUPPORT_TOL * scale):
        raise SupportOverflowError("vorticity reaches within two cells of the domain edge")


def _realline_smooth_table(spec: KernelSpec, domain):
    if spec.family == HL:
        return None
    if spec.family == MODIFIED:
        return _modified_realline_table(domain.N, domain.L, float(spec.a))
    return _perturbation_table(spec.f, domain)


@lru_cache(maxsize=8)
def _modified_realline_table(N, X, a):
    x = make_grid(_domain(N, X))
    diff = x[:, None] - x[None, :]
    return -0.5 * np.log(diff * diff + a)


def _domain(N, X):
    from .grid import REALLINE, DomainConfig
    return DomainConfig(X, N, REALLINE)


def velocity_realline(omega: GridField, spec: KernelSpec) -> GridField:
    """u(x) = (1/pi) int [log|x - y| + f(x, y)] omega(y) dy on [-X, X]."""
    d = omega.domain
    if d.periodic or spec.geometry != "real-line":
        raise InvalidConfigError("real-line velocity needs real-line grid and kernel", "mode")
    _check_support(omega)
    u = _toeplitz_apply(log_cell_weights(d.N, d.dx), omega.values) / np.pi
    table = _realline_smooth_table(spec, d)
    if table is not None:
        u = u + (d.dx / np.pi) * (table @ omega.values)
    return omega.with_values(u)


def _realline_gradient(omega: GridField, spec: KernelSpec) -> np.ndarray:
    d = omega.domain
    _check_support(omega)
    ux = _toeplitz_apply(hilbert_cell_weights(d.N), omega.values) / np.pi
    slope = fd4_derivative_values(omega.values, d.dx)
    ux = ux + d.dx / np.pi * _toeplitz_apply(hilbert_slope_weights(d.N), slope)
    if spec.family != HL:
        x = omega.x
        step = 1e-6 * max(1.0, d.L)
        if spec.family == MODIFIED:
            diff = x[:, None] - x[None, :]
            fx = -diff / (diff * diff + spec.a)
        else:
            fx = spec.f.dx_table(x, x, step)
        ux = ux + (d.dx / np.pi) * (fx @ omega.values)
    return ux


# ---------------------------------------------------------------------------
# dispatch


def velocity(omega: GridField, spec: KernelSpec) -> GridField:
    if spec.geometry == "real-line":
        return velocity_realline(omega, spec)
    if spec.family == HL:
        return velocity_hl_spectral(omega)
    if spec.family == MODIFIED:
        return velocity_modified(omega, spec.a)
    if spec.family == PERTURBED:
        return velocity_perturbed(omega, spec.f)
    raise InvalidConfigError(f"unknown family {spec.family!r}", "family")


def velocity_gradient(omega: GridField, spec: KernelSpec) -> GridField:
    """u_x: spectral derivative of u (periodic), or Hilbert-transform cell
    weights plus the differentiated smooth kernel (real line)."""
    if spec.geometry == "real-line":
        return omega.with_values(_realline_gradient(omega, spec))
    u = velocity(omega, spec)
    return u.with_values(spectral_derivative_values(u.values, u.domain))


def velocity_and_gradient(omega: GridField, spec: KernelSpec):
    """Both u and u_x as arrays, sharing the velocity evaluation."""
    u = velocity(omega, spec)
    if spec.geometry == "real-line":
        return u.values, _realline_gradient(omega, spec)
    return u.values, derivative_values(u.values, u.domain)


# ---------------------------------------------------------------------------
# cot-weighted form on the half period


def cot_weighted_velocity(omega: GridField, a: float, L: float | None = None) -> np.ndarray:
    """Samples of u(x) cot(mu x) at the nodes of (0, L/2) for the modified law,
    evaluated as (1/2pi) int_0^{L/2} F(x, y, a) omega(y) cot(mu y) dy.

    F is split into s (log S- - log S+) and the bounded remainder
    s (log(S+ + a) - log(S- + a)), with s = tan mu y / tan mu x and
    S+-= sin^2 mu(x +- y). Against omega cot(mu y) the first part becomes
    cot(mu x) times the full-period convolution of log sin^2 with odd omega,
    integrated exactly for the trigonometric interpolant. The remainder times
    omega cot(mu y) is smooth, even and periodic in y, so the half-range
    midpoint rule is spectrally accurate for it.
    """
    d = omega.domain
    _check_periodic(omega)
    if L is not None and abs(L - d.L) > 1e-12 * d.L:
        raise InvalidConfigError("L does not match the grid", "L")
    if not a > 0:
        raise InvalidConfigError(f"a must be positive, got {a}", "a")
    if symmetry_defect(omega.values, SymmetryClass.ODD) > 1e-12:
        raise SymmetryError("cot_weighted_velocity needs odd vorticity")
    N, h, mu = d.N, d.dx, d.mu
    n = N // 2
    x = make_grid(d)[:n]
    w = omega.values[:n]
    cot = 1.0 / np.tan(mu * x)
    F = _backend.kernel_table(_backend.F_PER, x, x, a, mu)
    X, Y = x[:, None], x[None, :]
    s = np.tan(mu * Y) / np.tan(mu * X)
    with np.errstate(divide="ignore", invalid="ignore"):
        singular = s * (np.log(np.sin(mu * (X - Y)) ** 2) - np.log(np.sin(mu * (X + Y)) ** 2))
        remainder = F - singular
    idx = np.arange(n)
    remainder[idx, idx] = np.log(np.sin(2.0 * mu * x) ** 2 + a) - np.log(a)
    # log sin^2(mu z) = -2 log 2 - 2 sum_k cos(2 k mu z) / k
    conv = np.fft.rfft(omega.values)
    k = np.arange(conv.size, dtype=float)
    lam = np.empty_like(k)
    lam[0] = -2.0 * d.L * np.log(2.0)
    lam[1:] = -d.L / k[1:]
    lam[-1] = 0.0
    log_part = np.fft.irfft(conv * lam, n=N)[:n]
    return (h * (remainder @ (w * cot)) + cot * log_part) / (2.0 * np.pi)
