"""Staggered uniform grids, field containers, quadrature and differentiation.

Nodes sit at cell centres, so the singular lines x = 0, x = L/2 and x = y of
every kernel in the package are never sampled.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import EmptyIntervalError, InvalidConfigError

PERIODIC = "periodic"
REALLINE = "real-line"
MODES = (PERIODIC, REALLINE)

# relative symmetry tolerance used by the default checks
TOL_SYM = 1e-12


@dataclass(frozen=True)
class DomainConfig:
    """Grid description.

    ``L`` is the period in periodic mode and the half-width X of [-X, X] in
    real-line mode. ``N`` is the number of cells.
    """

    L: float
    N: int
    mode: str = PERIODIC

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise InvalidConfigError(f"must be positive and finite, got {self.L}", "L")
        if int(self.N) != self.N or self.N < 2 or self.N % 2:
            raise InvalidConfigError(f"must be an even integer >= 2, got {self.N}", "N")
        if self.mode not in MODES:
            raise InvalidConfigError(f"must be one of {MODES}, got {self.mode!r}", "mode")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def mu(self) -> float:
        return np.pi / self.L

    @property
    def periodic(self) -> bool:
        return self.mode == PERIODIC

    @property
    def lower(self) -> float:
        return 0.0 if self.periodic else -self.L

    @property
    def length(self) -> float:
        """Total extent covered by the grid."""
        return self.L if self.periodic else 2.0 * self.L

    @property
    def dx(self) -> float:
        return self.length / self.N


def make_grid(config: DomainConfig) -> np.ndarray:
    """Return the N staggered node positions."""
    j = np.arange(config.N, dtype=float)
    return config.lower + (j + 0.5) * config.dx


@dataclass(frozen=True)
class GridField:
    domain: DomainConfig
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.domain.N,):
            raise InvalidConfigError(
                f"expected shape ({self.domain.N},), got {v.shape}", "values")
        if not np.all(np.isfinite(v)):
            raise InvalidConfigError("field contains non-finite samples", "values")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return make_grid(self.domain)

    def with_values(self, values) -> "GridField":
        return GridField(self.domain, values)

    @classmethod
    def from_function(cls, domain: DomainConfig, fn) -> "GridField":
        return cls(domain, fn(make_grid(domain)))

    @classmethod
    def zeros(cls, domain: DomainConfig) -> "GridField":
        return cls(domain, np.zeros(domain.N))


class SymmetryClass(enum.Enum):
    ODD = "odd"
    EVEN = "even"
    NONE = "none"


def _mirror(v: np.ndarray) -> np.ndarray:
    # x_j -> -x_j maps node j to node N-1-j on both grid types
    return v[::-1]


def symmetry_defect(values: np.ndarray, sym: SymmetryClass) -> float:
    """Largest pairwise symmetry violation, relative to max|v| (0 for v == 0)."""
    v = np.asarray(values, dtype=float)
    if sym is SymmetryClass.NONE:
        return 0.0
    scale = np.max(np.abs(v)) if v.size else 0.0
    if scale == 0.0:
        return 0.0
    m = _mirror(v)
    d = v + m if sym is SymmetryClass.ODD else v - m
    return float(np.max(np.abs(d)) / scale)


def has_symmetry(values, sym: SymmetryClass, tol: float = TOL_SYM) -> bool:
    return symmetry_defect(values, sym) <= tol


def project_odd(field: GridField) -> GridField:
    """Odd part (v(x) - v(-x))/2; exact and idempotent on the staggered grid."""
    v = field.values
    return field.with_values(0.5 * (v - _mirror(v)))


def project_even(field: GridField) -> GridField:
    v = field.values
    return field.with_values(0.5 * (v + _mirror(v)))


def _cell_weights(domain: DomainConfig, p: float, q: float) -> np.ndarray:
    edges = domain.lower + np.arange(domain.N + 1) * domain.dx
    return np.clip(np.minimum(q, edges[1:]) - np.maximum(p, edges[:-1]), 0.0, None)


def integrate(field: GridField, p: float, q: float, rule: str = "midpoint") -> float:
    """Integral of the sampled field over [p, q].

    ``rule="midpoint"`` integrates the piecewise-constant cell reconstruction,
    which is the midpoint rule whenever p and q are cell faces and is exactly
    additive over adjacent sub-intervals. ``rule="spectral"`` (periodic mode
    only) integrates the trigonometric interpolant exactly, which is
    spectrally accurate on any sub-interval for smooth periodic integrands.
    """
    if not q > p:
        raise EmptyIntervalError(f"empty interval [{p}, {q}]")
    d = field.domain
    hi = d.lower + d.length
    slack = 1e-12 * d.length
    if p < d.lower - slack or q > hi + slack:
        raise InvalidConfigError(f"[{p}, {q}] outside the domain [{d.lower}, {hi}]", "interval")
    if rule == "midpoint":
        return float(np.dot(_cell_weights(d, p, q), field.values))
    if rule == "spectral":
        if not d.periodic:
            raise InvalidConfigError("spectral rule needs a periodic field", "rule")
        return spectral_integral(field.values, d.L, p, q)
    raise InvalidConfigError(f"unknown rule {rule!r}", "rule")


def spectral_integral(values: np.ndarray, L: float, p: float, q: float) -> float:
    """Exact integral over [p, q] of the trigonometric interpolant of
    periodic staggered samples (node 0 at L/(2N))."""
    v = np.asarray(values, dtype=float)
    n_cells = v.size
    x0 = 0.5 * L / n_cells
    c = np.fft.rfft(v) / n_cells
    n = np.arange(c.size)
    k = 2.0 * np.pi * n[1:] / L
    prim = (np.exp(1j * k * (q - x0)) - np.exp(1j * k * (p - x0))) / (1j * k)
    mult = np.full(c.size - 1, 2.0)
    if n_cells % 2 == 0:
        mult[-1] = 1.0  # Nyquist term appears once
    total = c[0].real * (q - p) + np.sum(mult * (c[1:] * prim).real)
    return float(total)


def wavenumbers(domain: DomainConfig) -> np.ndarray:
    """Angular wavenumbers of the rfft bins, Nyquist bin set to zero."""
    k = 2.0 * np.pi * np.fft.rfftfreq(domain.N, d=domain.dx)
    k[-1] = 0.0
    return k


def spectral_derivative_values(values: np.ndarray, domain: DomainConfig) -> np.ndarray:
    v_hat = np.fft.rfft(values)
    return np.fft.irfft(1j * wavenumbers(domain) * v_hat, n=domain.N)


def spectral_derivative(field: GridField) -> GridField:
    """Derivative of the trigonometric interpolant (Nyquist mode dropped)."""
    if not field.domain.periodic:
        raise InvalidConfigError("spectral differentiation needs periodic mode", "mode")
    return field.with_values(spectral_derivative_values(field.values, field.domain))


def fd4_derivative_values(values: np.ndarray, dx: float,
                          left: float = 0.0, right: float = 0.0) -> np.ndarray:
    """Fourth-order centred difference with constant extension beyond the ends.

    ``left``/``right`` are the values assumed outside the interval; fields on
    the real-line domain are either compactly supported or constant there.
    """
    v = np.concatenate(([left, left], values, [right, right]))
    return (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * dx)


def derivative_values(values: np.ndarray, domain: DomainConfig,
                      left: float = 0.0, right: float = 0.0) -> np.ndarray:
    if domain.periodic:
        return spectral_derivative_values(values, domain)
    return fd4_derivative_values(values, domain.dx, left, right)


def interpolate_at_zero(values: np.ndarray, domain: DomainConfig,
                        method: str = "spectral") -> float:
    """Value of the field at x = 0.

    ``spectral`` uses the trigonometric interpolant on periodic grids;
    ``local`` (and any real-line grid) the cubic through the four nearest
    nodes, which is the natural choice for steep data that a global
    interpolant would ring on.
    """
    if method not in ("spectral", "local"):
        raise InvalidConfigError(f"unknown interpolation method {method!r}", "method")
    v = np.asarray(values, dtype=float)
    if domain.periodic and method == "spectral":
        c = np.fft.rfft(v) / domain.N
        n = np.arange(c.size)
        phase = np.exp(-1j * 2.0 * np.pi * n * (0.5 * domain.dx) / domain.L)
        mult = np.full(c.size, 2.0)
        mult[0] = 1.0
        mult[-1] = 1.0
        return float(np.sum(mult * (c * phase).real))
    m = domain.N // 2
    if domain.periodic:
        v = np.roll(v, m)
    # nodes at -3h/2, -h/2, h/2, 3h/2: Lagrange weights at 0
    return float((-v[m - 2] + 9.0 * v[m - 1] + 9.0 * v[m] - v[m + 1]) / 16.0)
