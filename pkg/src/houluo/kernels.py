"""Closed-form kernels of the periodic and real-line HL (log-kernel) velocity laws.

Conventions: ``mu = pi / L``; ``a`` always denotes the boundary-layer
parameter after relabelling (a length squared for the real-line kernels, a
dimensionless number for the periodic ones) and ``a_old`` the raw layer
width. The a-dependent corrections are written with ``log1p`` so nothing
cancels catastrophically when a is small against sin^2.

Point evaluators validate their arguments and raise; the ``*_values``
helpers are unchecked array versions used by the scan and quadrature code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (AxisSingularityError, DiagonalSingularityError,
                     InvalidConfigError, SingularityError)
from .grid import PERIODIC, REALLINE

HL = "HL"
MODIFIED = "modifiedHL"
PERTURBED = "perturbed"
FAMILIES = (HL, MODIFIED, PERTURBED)


@dataclass(frozen=True)
class KernelSpec:
    """Which velocity law is in force.

    ``a`` is required for the modified family, ``f`` (a validated
    perturbation) for the perturbed family. In real-line geometry the
    modified family means f(x, y) = -log sqrt((x - y)^2 + a).
    """

    family: str = HL
    geometry: str = PERIODIC
    a: float | None = None
    f: object = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidConfigError(f"unknown family {self.family!r}", "family")
        if self.geometry not in (PERIODIC, REALLINE):
            raise InvalidConfigError(f"unknown geometry {self.geometry!r}", "geometry")
        if self.family == MODIFIED:
            if self.a is None or not (self.a > 0 and np.isfinite(self.a)):
                raise InvalidConfigError(f"modified kernel needs a > 0, got {self.a}", "a")
        elif self.a is not None:
            raise InvalidConfigError("a is only meaningful for the modified kernel", "a")
        if self.family == PERTURBED:
            if self.f is None:
                raise InvalidConfigError("perturbed kernel needs f", "f")
            if getattr(self.f, "geometry", None) != self.geometry:
                raise InvalidConfigError("perturbation geometry does not match", "f")
        elif self.f is not None:
            raise InvalidConfigError("f is only meaningful for the perturbed kernel", "f")


class QuadCoeffs(NamedTuple):
    """Coefficients of the quadratic in a whose sign controls dG/da.

    ``scale2``/``scale0`` are the magnitudes of the terms that cancel in A2
    and A0, i.e. the round-off yardstick for the identities A2 = A0 = 0.
    """

    A2: float
    A1: float
    A0: float
    scale2: float = 1.0
    scale0: float = 1.0


class PeriodizationCheck(NamedTuple):
    truncated_sum: float
    closed_form: float
    diff: float


# ---------------------------------------------------------------------------
# one-dimensional kernels


def k_hl_periodic(z, L):
    """(1/pi) log|sin(mu z)|."""
    s = np.abs(np.sin(np.pi / L * np.asarray(z, dtype=float)))
    if np.any(s < 1e-300):
        raise SingularityError("k_hl_periodic evaluated at a lattice point")
    out = np.log(s) / np.pi
    return float(out) if out.ndim == 0 else out


def k_mod_periodic(z, L, a):
    """(1/2pi)[log sin^2(mu z) - log(sin^2(mu z) + a)], never positive."""
    if a < 0:
        raise InvalidConfigError(f"a must be non-negative, got {a}", "a")
    s = np.abs(np.sin(np.pi / L * np.asarray(z, dtype=float)))
    if np.any(s < 1e-300):
        raise SingularityError("k_mod_periodic evaluated at a lattice point")
    out = -np.log1p(a / (s * s)) / (2.0 * np.pi)
    return float(out) if out.ndim == 0 else out


def relabel_a(a_old, L):
    """(cosh(2 mu a_old) - 1)/2, evaluated as sinh^2(mu a_old)."""
    a_old = np.asarray(a_old, dtype=float)
    if np.any(a_old < 0):
        raise InvalidConfigError("a_old must be non-negative", "a_old")
    out = np.sinh(np.pi / L * a_old) ** 2
    return float(out) if out.ndim == 0 else out


def periodization_check(z: float, a_old: float, L: float, n_max: int) -> PeriodizationCheck:
    """Compare the truncated image sum of the real-line modified kernel
    with the periodic closed form.

    Images n and -n are added as pairs, and the pairs are accumulated with
    exact (fsum) summation, so the only error left is the dropped tail,
    roughly a_old^2 / (pi n_max L^2).
    """
    if n_max < 1:
        raise InvalidConfigError("n_max must be >= 1", "n_max")
    if a_old < 0:
        raise InvalidConfigError("a_old must be non-negative", "a_old")
    frac = z / L - round(z / L)
    if abs(frac) < 1e-15:
        raise SingularityError("periodization_check evaluated at a lattice point")
    n = np.arange(1, n_max + 1, dtype=float)
    a2 = a_old * a_old
    pairs = np.log1p(a2 / (z + n * L) ** 2) + np.log1p(a2 / (z - n * L) ** 2)
    total = math.fsum(np.concatenate(([math.log1p(a2 / z ** 2)], pairs[::-1])))
    truncated = -total / (2.0 * np.pi)
    closed = k_mod_periodic(z, L, relabel_a(a_old, L))
    return PeriodizationCheck(truncated, closed, abs(truncated - closed))


def boundary_layer_kernel(x, a_old):
    """(1/pi) log(|x| / sqrt(x^2 + a_old^2))."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise SingularityError("boundary-layer kernel is singular at x = 0")
    out = -np.log1p(a_old * a_old / (x * x)) / (2.0 * np.pi)
    return float(out) if out.ndim == 0 else out


def greens_check(x: float, a_old: float, n_quad: int) -> float:
    """Midpoint-rule integral over the layer [0, a_old] of the normal
    derivative of the half-plane Dirichlet Green's function, compared with
    the closed-form kernel. Returns the absolute mismatch."""
    if x == 0:
        raise SingularityError("greens_check is singular at x = 0")
    if a_old == 0:
        return abs(boundary_layer_kernel(x, 0.0))
    h = a_old / n_quad
    y = (np.arange(n_quad) + 0.5) * h
    integral = -h / np.pi * math.fsum(y / (x * x + y * y))
    return abs(integral - boundary_layer_kernel(x, a_old))


# ---------------------------------------------------------------------------
# unchecked array forms (broadcasting)


def tan_ratio(x, y, mu):
    return np.tan(mu * y) / np.tan(mu * x)


def K_values(x, y, mu):
    s = tan_ratio(x, y, mu)
    m = np.where(s < 1.0, s, 1.0 / s)
    return 2.0 * s * np.arctanh(m)


def Kx_values(x, y, mu):
    """x-derivative of K from the closed form (chain rule through s)."""
    s = tan_ratio(x, y, mu)
    m = np.where(s < 1.0, s, 1.0 / s)
    dK_ds = 2.0 * np.arctanh(m) - 2.0 * s / (s * s - 1.0)
    return dK_ds * (-2.0 * mu * s / np.sin(2.0 * mu * x))


def F_periodic_values(x, y, a, mu):
    sp = np.sin(mu * (x + y)) ** 2
    sm = np.sin(mu * (x - y)) ** 2
    return tan_ratio(x, y, mu) * (np.log1p(a / sp) - np.log1p(a / sm))


def G_periodic_values(x, y, a, mu):
    sp = np.sin(mu * (x + y)) ** 2
    sm = np.sin(mu * (x - y)) ** 2
    cx = 1.0 / np.tan(mu * x)
    cy = 1.0 / np.tan(mu * y)
    bracket = np.log1p(a / sp) - np.log1p(a / sm)
    rm = a / (sm + a)
    rp = a / (sp + a)
    return mu * (-(cx * cx + cy * cy + 2.0) * bracket
                 - 2.0 * cx * cy * (rm + rp) - 2.0 * (rm - rp))


def F_realline_values(x, y, a):
    dp = (x + y) ** 2
    dm = (x - y) ** 2
    return (y / x) * (np.log1p(a / dp) - np.log1p(a / dm))


def G_realline_values(x, y, a):
    dp = (x + y) ** 2
    dm = (x - y) ** 2
    bracket = np.log1p(a / dp) - np.log1p(a / dm)
    xy = x * y
    return (-(1.0 / (x * x) + 1.0 / (y * y)) * bracket
            - 2.0 * a / (xy * (dm + a)) - 2.0 * a / (xy * (dp + a)))


def quad_coeffs_periodic_values(x, y, mu) -> QuadCoeffs:
    """Scaled coefficients of P(a) = A2 a^2 + A1 a + A0, the numerator of
    dG/da over the positive factor (S- + a)^2 (S+ + a)^2 / mu."""
    sx, cxs = np.sin(mu * x), np.cos(mu * x)
    sy, cys = np.sin(mu * y), np.cos(mu * y)
    tx, ty = sx / cxs, sy / cys
    cx, cy = cxs / sx, cys / sy
    sp = np.sin(mu * (x + y)) ** 2
    sm = np.sin(mu * (x - y)) ** 2
    c = cx * cx + cy * cy + 2.0
    t2 = (c * (sp - sm), -2.0 * cx * cy * (sm + sp), -2.0 * (sm - sp))
    t1 = (c * (sp - sm) * (sp + sm), -8.0 * cx * cy * sm * sp,
          -2.0 * (2.0 * sm * sp - 2.0 * sp * sm))
    t0 = (c * (sp - sm) * sm * sp, -2.0 * cx * cy * (sm * sp * sp + sp * sm * sm),
          -2.0 * (sm * sp * sp - sp * sm * sm))
    base = tx * ty / (sx * cxs * sy * cys)
    p2 = base
    p1 = tx * ty / (sx * cxs * sy * cys) ** 2
    p0 = tx * ty / (sm * sp * cxs * cys * sx * sy)
    A2 = p2 * (t2[0] + t2[1] + t2[2])
    A1 = p1 * (t1[0] + t1[1] + t1[2])
    A0 = p0 * (t0[0] + t0[1] + t0[2])
    s2 = np.abs(p2) * (np.abs(t2[0]) + np.abs(t2[1]) + np.abs(t2[2]))
    s0 = np.abs(p0) * (np.abs(t0[0]) + np.abs(t0[1]) + np.abs(t0[2]))
    return QuadCoeffs(A2, A1, A0, s2, s0)


def quad_coeffs_realline_values(x, y) -> QuadCoeffs:
    dp = (x + y) ** 2
    dm = (x - y) ** 2
    w = 1.0 / (x * x) + 1.0 / (y * y)
    xy = x * y
    t2 = (w * (dp - dm), -2.0 / xy * (dm + dp))
    t1 = (w * (dp - dm) * (dp + dm), -8.0 / xy * dm * dp)
    t0 = (w * (dp - dm) * dp * dm, -2.0 / xy * (dm * dp * dp + dp * dm * dm))
    return QuadCoeffs(t2[0] + t2[1], t1[0] + t1[1], t0[0] + t0[1],
                      np.abs(t2[0]) + np.abs(t2[1]), np.abs(t0[0]) + np.abs(t0[1]))


# ---------------------------------------------------------------------------
# checked point evaluators


def _check_pair(x, y, upper, delta, allow_diagonal=False):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise AxisSingularityError("arguments must be positive")
    if upper is not None and (np.any(x >= upper) or np.any(y >= upper)):
        raise InvalidConfigError(f"arguments must lie below {upper}", "x")
    if np.any(np.minimum(x, y) <= delta):
        raise AxisSingularityError(f"argument within exclusion radius {delta} of the axis")
    if not allow_diagonal and np.any(np.abs(x - y) <= delta):
        raise DiagonalSingularityError(f"|x - y| within exclusion radius {delta}")
    return x, y


def _out(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def eval_K(x, y, L, delta=0.0):
    x, y = _check_pair(x, y, L / 2, delta)
    return _out(K_values(x, y, np.pi / L))


def eval_Kx(x, y, L, delta=0.0):
    x, y = _check_pair(x, y, L / 2, delta)
    return _out(Kx_values(x, y, np.pi / L))


def eval_F_periodic(x, y, a, L, delta=0.0):
    if a < 0:
        raise InvalidConfigError("a must be non-negative", "a")
    x, y = _check_pair(x, y, L / 2, delta)
    return _out(F_periodic_values(x, y, a, np.pi / L))


def eval_G_periodic(x, y, a, L, delta=0.0):
    if a < 0:
        raise InvalidConfigError("a must be non-negative", "a")
    x, y = _check_pair(x, y, L / 2, delta)
    return _out(G_periodic_values(x, y, a, np.pi / L))


def quad_coeffs_periodic(x, y, L, delta=0.0) -> QuadCoeffs:
    x, y = _check_pair(x, y, L / 2, delta)
    return QuadCoeffs(*(_out(v) for v in quad_coeffs_periodic_values(x, y, np.pi / L)))


def eval_F_realline(x, y, a, delta=0.0):
    if a < 0:
        raise InvalidConfigError("a must be non-negative", "a")
    x, y = _check_pair(x, y, None, delta)
    return _out(F_realline_values(x, y, a))


def eval_G_realline(x, y, a, delta=0.0):
    if a < 0:
        raise InvalidConfigError("a must be non-negative", "a")
    x, y = _check_pair(x, y, None, delta)
    return _out(G_realline_values(x, y, a))


def quad_coeffs_realline(x, y, delta=0.0) -> QuadCoeffs:
    x, y = _check_pair(x, y, None, delta)
    return QuadCoeffs(*(_out(v) for v in quad_coeffs_realline_values(x, y)))
