"""Experiment orchestration and bit-stable file output.

Each experiment writes into its own output directory:

* ``manifest.json``: resolved config, library versions, outcome
* ``series.csv``: diagnostics time series (simulate)
* ``snapshots/*.csv``: optional field dumps
* ``reports/*.json``: lemma reports and check summaries
* ``summary.csv``: one row per sweep point

Floats are written with ``repr`` (shortest round-trip form) and nothing
time-dependent goes into the series files, so identical configs give
byte-identical output.
"""
from __future__ import annotations

import csv
import io
import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .config import ConfigError, row_config, sweep_points, validate
from .diagnostics import (CSV_COLUMNS, estimate_blowup_time, make_sampler,
                          comparator_blowup_time, ode_comparator)
from .errors import FitError, HouLuoError, NumericalBlowupError
from .evolution import NAN, StepControl, run
from .grid import make_grid
from .kernels import KernelSpec, greens_check, periodization_check
from .lemma_lab import run_lemma_suite
from .scenarios import (ScenarioSpec, build_sec4, bump_perturbation, build_state, cosine_perturbation,
                        estimate_Cf, estimate_eps1, estimate_eps2, modified_kernel_perturbation,
                        required_I0, zero_perturbation)

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

SUMMARY_COLUMNS = ("row", "params", "status", "termination", "final_t", "final_bkm",
                   "T_est", "fit_quality", "error")


class RunFailure(HouLuoError):
    def __init__(self, code: int, message: str, result: dict | None = None):
        self.code = code
        self.result = result or {}
        super().__init__(message)


# ---------------------------------------------------------------------------
# formatting


def fmt(v) -> str:
    """Shortest round-trip text for a float; ints and strings pass through."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_json_safe(obj), indent=2) + "\n")


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def versions() -> dict:
    import scipy
    return {"houluo": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "kernel_backend": _backend.BACKEND}


# ---------------------------------------------------------------------------
# config -> objects


def make_perturbation(cfg: dict):
    p = cfg["perturbation"]
    L = cfg["scenario"]["L"]
    kind = p["kind"]
    if cfg["scenario"]["class"] == "realline":
        return bump_perturbation(p["amplitude"]) if kind == "bump" else zero_perturbation(1.0, "real-line")
    if kind == "cosine":
        return cosine_perturbation(L, p["amplitude"], p["mode"], p["c1_norm"])
    if kind == "modified":
        return modified_kernel_perturbation(L, p["a"])
    return zero_perturbation(L)


def make_spec(cfg: dict):
    """ScenarioSpec plus the perturbation and sec4 context (eps radii, Cf)."""
    sc, ke = cfg["scenario"], cfg["kernel"]
    geometry = "real-line" if sc["class"] == "realline" else "periodic"
    f = make_perturbation(cfg)
    if ke["family"] == "perturbed":
        kernel = KernelSpec("perturbed", geometry, f=f)
    elif ke["family"] == "modifiedHL":
        kernel = KernelSpec("modifiedHL", geometry, a=ke["a"])
    else:
        kernel = KernelSpec("HL", geometry)
    context = {"perturbation": f.describe()}
    eps = sc["eps"]
    if sc["class"] == "sec4":
        e1, e2 = estimate_eps1(f, sc["L"]), estimate_eps2(f, sc["L"])
        Cf = estimate_Cf(f, sc["L"])
        if eps == "auto":
            eps = 0.5 * min(e1, e2)
        context.update(eps1=e1, eps2=e2, eps=eps, Cf=Cf,
                       required_I0=required_I0(f, sc["M"], sc["L"], Cf))
    spec = ScenarioSpec(sc["class"], sc["L"], sc["N"], kernel, M=sc["M"], eps=eps,
                        omega_amp=sc["omega_amp"], omega_width=sc["omega_width"],
                        theta_width=sc["theta_width"], omega_offset=sc["omega_offset"],
                        theta_offset=sc["theta_offset"], auto_amplitude=sc["auto_amplitude"],
                        I0_target=sc["I0_target"], blowup_by=sc["blowup_by"])
    return spec, f, context


def make_control(cfg: dict) -> StepControl:
    c = cfg["control"]
    return StepControl(t_max=c["t_max"], cfl=c["cfl"], dt_min=c["dt_min"],
                       bkm_stop=c["bkm_stop"], dealias=c["dealias"], scheme=c["scheme"])


# ---------------------------------------------------------------------------
# experiments


def _fit(t, I):
    try:
        fit = estimate_blowup_time(t, I)
        return fit.T_est, fit.fit_quality
    except FitError:
        return float("nan"), float("nan")


def simulate(cfg: dict, out: Path) -> dict:
    spec, f, context = make_spec(cfg)
    # sec4 admissibility is judged against the configured perturbation
    state, I0 = build_sec4(spec, f) if spec.cls == "sec4" else build_state(spec)
    control = make_control(cfg)
    base = make_sampler(eps=context.get("eps"), rates=True)
    every = cfg["output"]["snapshot_every"]
    counter = [0]
    x = make_grid(state.domain)

    def sampler(s, bkm, u, ux, ctl):
        if every and counter[0] % every == 0:
            write_csv(out / "snapshots" / f"snap_{counter[0]:06d}.csv", ("x", "omega", "theta", "u"),
                      zip(x, s.omega.values, s.theta.values, u))
        counter[0] += 1
        return base(s, bkm, u, ux, ctl)

    tr = run(state, control, cfg["control"]["diag_every"], sampler, cfg["control"]["max_steps"])
    write_csv(out / "series.csv", CSV_COLUMNS, (s.row() for s in tr.samples))
    T_est, quality = _fit(tr.column("t"), tr.column("I"))
    result = {"termination": tr.reason, "message": tr.message, "steps": tr.steps,
              "final_t": tr.final.t, "final_bkm": tr.samples[-1].bkm, "I0": I0,
              "T_est": T_est, "fit_quality": quality, **context}
    if tr.reason == NAN:
        raise RunFailure(EXIT_NUMERICAL, f"numerical failure: {tr.message}", result)
    return result


def verify_lemmas(cfg: dict, out: Path) -> dict:
    lc = cfg["lemmas"]
    reports = run_lemma_suite(lc["a_values"], lc["L"], lc["resolution"], refine=lc["refine"])
    for r in reports:
        write_json(out / "reports" / f"{r.property_id}.json", r.to_json())
    return {"reports": [r.property_id for r in reports],
            "passed": {r.property_id: r.passed for r in reports},
            "all_passed": all(r.passed for r in reports)}


def ode_compare(cfg: dict, out: Path) -> dict:
    oc = cfg["ode"]
    res = ode_comparator(oc["C"], oc["I0"], oc["dt"], oc["I_cap"])
    closed = comparator_blowup_time(oc["C"], oc["I0"])
    write_csv(out / "ode.csv", ("t", "I"), zip(res.t, res.I))
    rep = {"C": oc["C"], "I0": oc["I0"], "dt": oc["dt"], "T_numeric": res.T_blowup,
           "fit_quality": res.fit_quality, "T_closed_form": closed, "rel_diff": abs(res.T_blowup - closed) / closed}
    write_json(out / "reports" / "ode_compare.json", rep)
    return rep


def derive_kernel(cfg: dict, out: Path) -> dict:
    """Periodization and Green's-function checks on a fixed, reproducible point set."""
    dc = cfg["derive"]
    L, n = dc["L"], dc["n_points"]
    z = np.linspace(0.05, 0.95, n) * L
    a_old = np.geomspace(0.05, 1.0, n)
    per = [periodization_check(float(zi), float(ai), L, dc["n_max"]) for zi, ai in zip(z, a_old)]
    xs = np.linspace(0.1, 3.0, n)
    gre = [greens_check(float(xi), float(ai), dc["n_quad"]) for xi, ai in zip(xs, a_old)]
    # the dropped images contribute about a_old^2 / (pi n_max L^2)
    per_rep = {"points": [{"z": float(zi), "a_old": float(ai), **p._asdict(),
                           "tail_estimate": ai * ai / (np.pi * dc["n_max"] * L * L)}
                          for zi, ai, p in zip(z, a_old, per)],
               "max_abs_diff": max(abs(p.diff) for p in per)}
    gre_rep = {"points": [{"x": float(xi), "a_old": float(ai), "residual": g}
                          for xi, ai, g in zip(xs, a_old, gre)],
               "max_residual": max(gre)}
    write_json(out / "reports" / "periodization.json", per_rep)
    write_json(out / "reports" / "greens.json", gre_rep)
    return {"periodization_max_abs_diff": per_rep["max_abs_diff"],
            "greens_max_residual": gre_rep["max_residual"]}


def _sweep_row(args):
    i, point, cfg, out = args
    row_dir = Path(out) / "rows" / f"row_{i:04d}"
    params = json.dumps(point, sort_keys=False)
    try:
        rc = row_config(cfg, point)
        res = _run_to_dir(rc, row_dir)
        status = "ok"
        err = ""
    except RunFailure as exc:
        res, status, err = exc.result, "numerical-failure", str(exc)
    except (ConfigError, HouLuoError, ValueError) as exc:
        res, status, err = {}, "invalid", str(exc)
    return (i, params, status, res.get("termination", ""), res.get("final_t"),
            res.get("final_bkm"), res.get("T_est"), res.get("fit_quality"), err)


def sweep(cfg: dict, out: Path, threads: int = 1) -> dict:
    points = sweep_points(cfg)
    jobs = [(i, p, cfg, str(out)) for i, p in enumerate(points)]
    workers = int(threads) if threads > 1 else cfg["sweep"]["workers"]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    rows.sort(key=lambda r: r[0])
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, rows)
    return {"rows": len(rows), "failed": sum(r[2] != "ok" for r in rows)}


EXPERIMENT_FUNCS = {"simulate": simulate, "verify-lemmas": verify_lemmas,
                    "ode-compare": ode_compare, "derive-kernel": derive_kernel}


def _run_to_dir(cfg: dict, out: Path, threads: int = 1, seed: int | None = None) -> dict:
    """Run one experiment and write its manifest; raises on failure after
    recording the failure in the manifest."""
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": cfg, "versions": versions(), "seed": seed, "status": "ok"}
    try:
        if cfg["experiment"] == "sweep":
            result = sweep(cfg, out, threads)
        else:
            result = EXPERIMENT_FUNCS[cfg["experiment"]](cfg, out)
    except RunFailure as exc:
        manifest.update(status="numerical-failure", error=str(exc), result=exc.result)
        write_json(out / "manifest.json", manifest)
        raise
    manifest["result"] = result
    write_json(out / "manifest.json", manifest)
    return result


def run_experiment(config, out, seed: int | None = None, threads: int = 1,
                   experiment: str | None = None) -> int:
    """Validate ``config`` (a YAML path, a dict or None for defaults), run it
    into ``out`` and return the exit code. ``experiment`` overrides the
    config's own experiment field."""
    from .config import read_raw
    out = Path(out)
    _backend.set_threads(threads)
    try:
        raw = read_raw(config) if not isinstance(config, dict) else dict(config)
        if experiment is not None:
            raw["experiment"] = experiment
        cfg = validate(raw)
    except ConfigError as exc:
        _report(exc)
        return EXIT_INVALID
    try:
        _run_to_dir(cfg, out, threads, seed)
    except RunFailure as exc:
        _report(exc)
        return exc.code
    except NumericalBlowupError as exc:
        _report(exc)
        return EXIT_NUMERICAL
    except (HouLuoError, ValueError) as exc:
        _report(exc)
        _record_failure(out, cfg, seed, "invalid", str(exc))
        return EXIT_INVALID
    except OSError as exc:
        _report(exc)
        return EXIT_IO
    return EXIT_OK


def _record_failure(out, cfg, seed, status, msg):
    try:
        write_json(out / "manifest.json", {"config": cfg, "versions": versions(), "seed": seed,
                                           "status": status, "error": msg})
    except OSError:
        pass


def _report(exc):
    import sys
    if isinstance(exc, ConfigError):
        for k, m in exc.problems:
            print(f"config error: {k}: {m}", file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
