"""Grid scans of the kernel inequalities.

Every scan samples a staggered product grid over the open region, drops
points within the exclusion radius delta (one spacing by default) of the
singular lines x = 0, y = 0, x = y and of the upper edge, and reports the
extremal value, where it occurs, a scan-estimated constant and how much
the extremum moves when the resolution is doubled. Constants are never
extrapolated: they are what the scan saw at its resolution.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from ._pykernels import exclusion_mask
from ._rows import combine_rows, row_reduce
from .errors import InvalidConfigError
from .kernels import K_values, Kx_values, quad_coeffs_periodic_values, quad_coeffs_realline_values

ALL, X_LT_Y, Y_LT_X = 0, 1, 2
REGION_NAMES = {ALL: "0<x,y<{u}", X_LT_Y: "0<x<y<{u}", Y_LT_X: "0<y<x<{u}"}
DEFAULT_A = (0.01, 0.1, 1.0, 10.0)
DEFAULT_RESOLUTION = 400
REFINE_LIMIT = 0.1

SIGN_TOL = 0.0
MONOTONE_TOL = 1e-8
POSITIVE_TOL = 1e-10
INCREMENT_TOL = 1e-9
BOUND_TOL = 1e-10
COEFF_TOL = 1e-9
A1_FLOOR = 32.0
A1_TOL = 1e-6


@dataclass
class LemmaReport:
    property_id: str
    region: str
    resolution: int
    delta: float
    a: object
    extremal_value: float
    location_x: float
    location_y: float
    estimated_constant: float
    passed: bool
    refinement_ratio: float
    n_included: int = 0
    n_excluded: int = 0
    n_nonfinite: int = 0
    scale: float = 0.0
    degenerate: bool = False
    annotations: dict = field(default_factory=dict)
    sub_reports: list = field(default_factory=list)

    @property
    def refined(self) -> bool:
        """True when doubling the resolution moved the extremum by at most 10 %."""
        return bool(np.isfinite(self.refinement_ratio) and self.refinement_ratio <= REFINE_LIMIT)

    def to_json(self) -> dict:
        d = asdict(self)
        out = {"property_id": self.property_id, "region": self.region,
               "resolution": self.resolution, "a": self.a,
               "extremal_value": self.extremal_value, "location_x": self.location_x,
               "location_y": self.location_y, "estimated_constant": self.estimated_constant,
               "pass": self.passed, "refinement_ratio": self.refinement_ratio}
        out.update({k: d[k] for k in ("delta", "n_included", "n_excluded", "n_nonfinite",
                                      "scale", "degenerate", "annotations")})
        out["sub_reports"] = [s.to_json() for s in self.sub_reports]
        return _jsonable(out)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def scan_nodes(upper: float, n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) * (upper / n)


class _Scan:
    """Raw scan outcome at one resolution."""

    def __init__(self, value, i, j, n_in, n_ex, n_bad, mean_abs, xs, ys):
        self.value = value
        self.x = float(xs[i]) if i >= 0 else float("nan")
        self.y = float(ys[j]) if j >= 0 else float("nan")
        self.n_in, self.n_ex, self.n_bad = n_in, n_ex, n_bad
        self.scale = mean_abs


def _kernel_scan(kind, a, mu, upper, n, region, find_max, h_frac=0.0, backend=None,
                 delta_frac=1.0):
    xs = scan_nodes(upper, n)
    delta = delta_frac * upper / n
    h = h_frac * upper / n
    r = _backend.scan_extremum(kind, xs, xs, a, mu, delta, upper, region, find_max, h,
                               backend=backend)
    return _Scan(*r, xs, xs), delta


def _table_scan(table_fn, upper, n, region, find_max):
    """Scan of an arbitrary table built by table_fn(X, Y) (numpy path)."""
    xs = scan_nodes(upper, n)
    delta = upper / n
    with np.errstate(all="ignore"):
        t = np.broadcast_to(table_fn(xs[:, None], xs[None, :]), (n, n))
    excl = exclusion_mask(xs, xs, delta, upper, region)
    finite = np.isfinite(t)
    use = ~excl & finite
    best, arg, cnt, ab = row_reduce(t, use, find_max)
    cnt[:, 1] = excl.sum(axis=1)
    cnt[:, 2] = (~excl & ~finite).sum(axis=1)
    return _Scan(*combine_rows(best, arg, cnt, ab, find_max), xs, xs), delta


def _ratio(coarse: _Scan, fine: _Scan, floor: float = 1e-300) -> float:
    denom = max(abs(fine.value), fine.scale, floor)
    return float(abs(fine.value - coarse.value) / denom)


def _in_region(x, y, upper, region):
    if not (0 < x < upper and 0 < y < upper):
        return False
    return {ALL: x != y, X_LT_Y: x < y, Y_LT_X: y < x}[region]


def _report(pid, scan_fn, upper, n, region, a, verdict, constant, refine,
            annotations=None, ratio_floor=1e-300):
    """Run scan_fn(n) (and scan_fn(2n) when refining) and assemble a report.

    verdict(value, scale) -> bool; constant(value) -> estimated constant.
    The refinement ratio is |change| / max(|extremum|, mean |value|, ratio_floor).
    """
    s, delta = scan_fn(n)
    ratio = float("nan")
    if refine:
        s2, _ = scan_fn(2 * n)
        ratio = _ratio(s, s2, ratio_floor)
    ok = bool(np.isfinite(s.value) and verdict(s.value, s.scale))
    ann = dict(annotations or {})
    ann["location_in_region"] = _in_region(s.x, s.y, upper, region)
    if refine and not ratio <= REFINE_LIMIT:
        ann["under_resolved"] = "extremum moved by more than 10% under doubling"
    return LemmaReport(pid, REGION_NAMES[region].format(u=upper), n, delta, a,
                       float(s.value), s.x, s.y, float(constant(s.value)), ok, ratio,
                       s.n_in, s.n_ex, s.n_bad, float(s.scale), annotations=ann)


def _degenerate(pid, region, upper, n, a, note):
    return LemmaReport(pid, REGION_NAMES[region].format(u=upper), n, upper / n, a, 0.0,
                       float("nan"), float("nan"), 0.0, False, 0.0, degenerate=True,
                       annotations={"degenerate": note})


def case_boundaries(a: float, L: float) -> dict:
    """Scales sqrt(a*)/mu and sqrt(a*)/(2 mu), a* = min(a, 1/16), at which the
    sign argument changes regime; logged so failures can be localised."""
    mu = np.pi / L
    a_star = min(a, 1.0 / 16.0)
    return {"a_star": a_star, "sqrt_a_star_over_mu": float(np.sqrt(a_star) / mu),
            "sqrt_a_star_over_2mu": float(np.sqrt(a_star) / (2 * mu))}


def _check_a(a):
    if not (np.isfinite(a) and a >= 0):
        raise InvalidConfigError(f"a must be non-negative, got {a}", "a")


# ---------------------------------------------------------------------------
# periodic scans


def scan_F_sign(a: float, L: float = 1.0, resolution: int = DEFAULT_RESOLUTION,
                refine: bool = True, backend=None, delta_frac: float = 1.0) -> LemmaReport:
    """max F over 0 < x < y < L/2; passes iff the max is negative. C(a) = -max.

    ``delta_frac`` sets the exclusion radius in units of the grid spacing.
    """
    _check_a(a)
    upper = L / 2
    if a == 0:
        return _degenerate("F_sign", X_LT_Y, upper, resolution, a, "F vanishes identically at a = 0")
    mu = np.pi / L
    return _report("F_sign",
                   lambda n: _kernel_scan(_backend.F_PER, a, mu, upper, n, X_LT_Y, True,
                                          backend=backend, delta_frac=delta_frac),
                   upper, resolution, X_LT_Y, a, lambda v, s: v < SIGN_TOL, lambda v: -v,
                   refine, annotations=case_boundaries(a, L))


def scan_F_monotone(a: float, L: float = 1.0, resolution: int = DEFAULT_RESOLUTION,
                    h: float | None = None, refine: bool = True, backend=None) -> LemmaReport:
    """min of [F(x + h) - F(x - h)]/(2h) over 0 < y < x < L/2.

    h is given as a length and must not exceed a quarter spacing; the default
    is exactly a quarter spacing (kept as that fraction under refinement).
    """
    _check_a(a)
    upper = L / 2
    spacing = upper / resolution
    frac = 0.25 if h is None else h / spacing
    if not 0 < frac <= 0.25 * (1 + 1e-12):
        raise InvalidConfigError("h must lie in (0, spacing/4]", "h")
    if a == 0:
        return _degenerate("F_monotone", Y_LT_X, upper, resolution, a,
                           "differences vanish identically at a = 0")
    mu = np.pi / L
    rep = _report("F_monotone",
                  lambda n: _kernel_scan(_backend.F_PER, a, mu, upper, n, Y_LT_X, False, frac,
                                         backend=backend),
                  upper, resolution, Y_LT_X, a, lambda v, s: v >= -MONOTONE_TOL * s,
                  lambda v: v, refine, annotations=case_boundaries(a, L))
    rep.annotations["h"] = frac * spacing
    return rep


def scan_G_positive(a: float, L: float = 1.0, resolution: int = DEFAULT_RESOLUTION,
                    refine: bool = True, backend=None) -> LemmaReport:
    """min G over (0, L/2)^2 off the diagonal; passes iff min > -1e-10 scale."""
    _check_a(a)
    upper = L / 2
    if a == 0:
        return _degenerate("G_positive", ALL, upper, resolution, a, "G vanishes identically at a = 0")
    mu = np.pi / L
    return _report("G_positive",
                   lambda n: _kernel_scan(_backend.G_PER, a, mu, upper, n, ALL, False,
                                          backend=backend),
                   upper, resolution, ALL, a, lambda v, s: v > -POSITIVE_TOL * s, lambda v: v,
                   refine, annotations=case_boundaries(a, L))


def scan_daG(a_values=None, L: float = 1.0, resolution: int = DEFAULT_RESOLUTION,
             refine: bool = True, backend=None) -> LemmaReport:
    """Smallest forward difference (G(a_k+1) - G(a_k)) / max(1, |G(a_k)|) over
    the square and a geometric a-range (default 25 values in [0.01, 10])."""
    a_values = list(np.geomspace(0.01, 10.0, 25) if a_values is None else a_values)
    if len(a_values) < 2 or np.any(np.diff(a_values) <= 0):
        raise InvalidConfigError("need an increasing list of at least two a values", "a_values")
    upper = L / 2
    mu = np.pi / L

    def scan(n):
        xs = scan_nodes(upper, n)
        r = _backend.scan_a_increments(_backend.G_PER, xs, xs, a_values, mu, upper / n, upper,
                                       backend=backend)
        value, i, j, k, n_in, n_ex, n_bad = r
        s = _Scan(value, i, j, n_in, n_ex, n_bad, 1.0, xs, xs)
        s.k = k
        return s, upper / n

    rep = _report("daG", scan, upper, resolution, ALL, [float(v) for v in a_values],
                  lambda v, s: v >= -INCREMENT_TOL, lambda v: v, refine)
    return rep


def _sub(pid, table_fn, upper, n, region, find_max, verdict, constant, refine, a=None,
         ratio_floor=1e-300):
    return _report(pid, lambda m: _table_scan(table_fn, upper, m, region, find_max),
                   upper, n, region, a, verdict, constant, refine, ratio_floor=ratio_floor)


def _parent(pid, subs, region, upper, n, a, margin, annotations=None):
    """Aggregate sub-reports: passes iff all pass; the extremal entry is the
    sub-report with the smallest margin(report)."""
    worst = min(subs, key=margin)
    ratio = max((s.refinement_ratio for s in subs), default=float("nan"))
    rep = LemmaReport(pid, REGION_NAMES[region].format(u=upper), n, upper / n, a,
                      worst.extremal_value, worst.location_x, worst.location_y,
                      worst.estimated_constant, all(s.passed for s in subs), ratio,
                      sum(s.n_included for s in subs), sum(s.n_excluded for s in subs),
                      sum(s.n_nonfinite for s in subs), worst.scale,
                      degenerate=any(s.degenerate for s in subs),
                      annotations=dict(annotations or {}), sub_reports=list(subs))
    rep.annotations["worst_sub_report"] = worst.property_id
    return rep


def scan_K_bounds(L: float = 1.0, resolution: int = DEFAULT_RESOLUTION,
                  refine: bool = True) -> LemmaReport:
    """K >= 0 everywhere, K >= 2 for x < y, K >= 2 s^2 for y < x (s = tan mu y / tan mu x),
    and the sign K_x <= 0 for y < x (the large-a limit of F increasing in x, since F -> -2K)."""
    upper = L / 2
    mu = np.pi / L
    n = resolution

    def s2(X, Y):
        s = np.tan(mu * Y) / np.tan(mu * X)
        return K_values(X, Y, mu) - 2.0 * s * s

    subs = [
        _sub("K_nonnegative", lambda X, Y: K_values(X, Y, mu), upper, n, ALL, False,
             lambda v, s: v >= -BOUND_TOL, lambda v: v, refine),
        _sub("K_at_least_2", lambda X, Y: K_values(X, Y, mu) - 2.0, upper, n, X_LT_Y, False,
             lambda v, s: v >= -BOUND_TOL, lambda v: v + 2.0, refine),
        _sub("K_at_least_2s2", s2, upper, n, Y_LT_X, False,
             lambda v, s: v >= -BOUND_TOL, lambda v: v, refine),
        _sub("Kx_nonpositive", lambda X, Y: -Kx_values(X, Y, mu), upper, n, Y_LT_X, False,
             lambda v, s: v >= -BOUND_TOL * max(1.0, s), lambda v: v, refine),
    ]
    return _parent("K_bounds", subs, ALL, upper, n, None,
                   lambda r: r.extremal_value if r.passed else -np.inf)


def scan_quad_coeffs(L: float = 1.0, resolution: int = DEFAULT_RESOLUTION,
                     geometry: str = "periodic", refine: bool = True) -> LemmaReport:
    """Coefficients of the quadratic a -> P(a) whose sign gives dG/da.

    Periodic: |A2|, |A0| <= 1e-9 * scale and A1 >= 32 - 1e-6; real line:
    |A2|, |A0| <= 1e-9 * scale and A1 >= -1e-9. The scale of A2 (A0) is the
    pointwise sum of the absolute values of its terms.
    """
    n = resolution
    if geometry == "periodic":
        upper = L / 2
        mu = np.pi / L
        coeffs = lambda X, Y: quad_coeffs_periodic_values(X, Y, mu)  # noqa: E731
        a1_floor, a1_tol = A1_FLOOR, A1_TOL
        pid = "quad_coeffs_periodic"
    elif geometry == "real-line":
        upper = L
        coeffs = quad_coeffs_realline_values
        a1_floor, a1_tol = 0.0, COEFF_TOL
        pid = "quad_coeffs_realline"
    else:
        raise InvalidConfigError(f"unknown geometry {geometry!r}", "geometry")

    def rel(idx, scale_idx):
        def f(X, Y):
            c = coeffs(X, Y)
            return -np.abs(c[idx]) / c[scale_idx]
        return f

    subs = [
        # relative coefficients: changes are measured against the tolerance
        _sub("A2_vanishes", rel(0, 3), upper, n, ALL, False,
             lambda v, s: v >= -COEFF_TOL, lambda v: -v, refine, ratio_floor=COEFF_TOL),
        _sub("A0_vanishes", rel(2, 4), upper, n, ALL, False,
             lambda v, s: v >= -COEFF_TOL, lambda v: -v, refine, ratio_floor=COEFF_TOL),
        _sub("A1_lower_bound", lambda X, Y: coeffs(X, Y)[1], upper, n, ALL, False,
             lambda v, s: v >= a1_floor - a1_tol, lambda v: v, refine),
    ]
    rep = _parent(pid, subs, ALL, upper, n, None,
                  lambda r: 0 if r.passed else -1 if r.property_id != "A1_lower_bound" else -2)
    if geometry == "periodic":
        a2 = subs[0]
        rep.annotations["A2_sign"] = _a2_sign_note(L, n)
        if not a2.passed:
            rep.annotations["A2_nonzero"] = (
                "A2 does not vanish; A2 / (tan mu x tan mu y / (sin cos)_x (sin cos)_y) "
                "equals 4 (sin^2 mu(x+y) - sin^2 mu(x-y)) > 0, so dG/da >= 0 still follows")
    return rep


def _a2_sign_note(L, n):
    mu = np.pi / L
    xs = scan_nodes(L / 2, n)
    X, Y = xs[:, None], xs[None, :]
    with np.errstate(all="ignore"):
        A2 = quad_coeffs_periodic_values(X, Y, mu).A2
    off = ~np.eye(n, dtype=bool)
    return {"min_A2": float(np.min(A2[off])), "A2_nonnegative": bool(np.all(A2[off] >= 0))}


# ---------------------------------------------------------------------------
# real line


def scan_realline_lemma(a: float, X: float = 2.0, resolution: int = DEFAULT_RESOLUTION,
                        refine: bool = True, backend=None) -> LemmaReport:
    """Real-line analogues: F < 0 on 0 < x < y < 1, F increasing in x on
    0 < y < x < X, G > 0 on (0, X)^2, and g(t) = 2a/(t(t^2 + a)) decreasing on (0, 2X)."""
    _check_a(a)
    n = resolution
    if a == 0:
        return _degenerate("realline_lemma", ALL, X, n, a, "all quantities vanish at a = 0")
    subs = [
        _report("realline_F_sign",
                lambda m: _kernel_scan(_backend.F_RL, a, 1.0, 1.0, m, X_LT_Y, True, backend=backend),
                1.0, n, X_LT_Y, a, lambda v, s: v < SIGN_TOL, lambda v: -v, refine),
        _report("realline_F_monotone",
                lambda m: _kernel_scan(_backend.F_RL, a, 1.0, X, m, Y_LT_X, False, 0.25,
                                       backend=backend),
                X, n, Y_LT_X, a, lambda v, s: v >= -MONOTONE_TOL * s, lambda v: v, refine),
        _report("realline_G_positive",
                lambda m: _kernel_scan(_backend.G_RL, a, 1.0, X, m, ALL, False, backend=backend),
                X, n, ALL, a, lambda v, s: v > -POSITIVE_TOL * s, lambda v: v, refine),
    ]
    t = scan_nodes(2.0 * X, 4 * n)
    g = 2.0 * a / (t * (t * t + a))
    dg = np.diff(g)
    k = int(np.argmax(dg))
    g_rep = LemmaReport("g_decreasing", f"0<t<{2 * X}", 4 * n, 2 * X / (4 * n), a,
                        float(dg[k]), float(t[k]), float("nan"), float(-dg[k]),
                        bool(np.all(dg < 0)), 0.0, n_included=int(dg.size),
                        scale=float(np.mean(np.abs(dg))))
    subs.append(g_rep)
    return _parent("realline_lemma", subs, ALL, X, n, a,
                   lambda r: 0 if r.passed else -1)


# ---------------------------------------------------------------------------
# suite


def _over_a(pid, fn, a_values, region, upper, n):
    subs = [fn(a) for a in a_values]
    rep = _parent(pid, subs, region, upper, n, [float(a) for a in a_values],
                  lambda r: 0 if r.passed else -1)
    # the constant over the a-range is the worst (smallest) one
    rep.estimated_constant = float(min(s.estimated_constant for s in subs))
    return rep


def run_lemma_suite(a_values=DEFAULT_A, L: float = 1.0, resolution: int = DEFAULT_RESOLUTION,
                    X: float = 2.0, refine: bool = True, backend=None) -> list:
    """The eight standard reports, each aggregating its per-a sub-scans."""
    a_values = [float(a) for a in a_values]
    n = resolution
    up = L / 2
    return [
        _over_a("F_sign", lambda a: scan_F_sign(a, L, n, refine, backend), a_values, X_LT_Y, up, n),
        _over_a("F_monotone", lambda a: scan_F_monotone(a, L, n, None, refine, backend),
                a_values, Y_LT_X, up, n),
        _over_a("G_positive", lambda a: scan_G_positive(a, L, n, refine, backend),
                a_values, ALL, up, n),
        scan_daG(None, L, n, refine, backend),
        scan_K_bounds(L, n, refine),
        scan_quad_coeffs(L, n, "periodic", refine),
        scan_quad_coeffs(X, n, "real-line", refine),
        _over_a("realline_lemma", lambda a: scan_realline_lemma(a, X, n, refine, backend),
                a_values, ALL, X, n),
    ]
