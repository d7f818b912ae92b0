"""Run configuration: YAML in, fully materialised nested dict out.

Every field has a default, and the resolved config (defaults included) is
what gets written to the manifest, so a manifest alone replays a run.
Validation collects all problems before raising.
"""
from __future__ import annotations

import copy
import itertools
import math
from pathlib import Path

import yaml

from .errors import HouLuoError

EXPERIMENTS = ("simulate", "verify-lemmas", "ode-compare", "sweep", "derive-kernel")

# section -> field -> (default, kind); kinds drive coercion and checks
SCHEMA: dict[str, dict[str, tuple]] = {
    "scenario": {
        "class": ("sec3", ("choice", ("sec3", "sec4", "realline"))),
        "L": (1.0, "pos"),
        "N": (256, "even"),
        "M": (1.0, "nonneg"),
        "eps": (None, "eps?"),
        "omega_amp": (1.0, "nonneg"),
        "omega_width": (None, "pos?"),
        "theta_width": (None, "pos?"),
        "omega_offset": (0.0, "nonneg"),
        "theta_offset": (0.0, "nonneg"),
        "auto_amplitude": (False, "bool"),
        "I0_target": (None, "pos?"),
        "blowup_by": (None, "pos?"),
    },
    "kernel": {
        "family": ("HL", ("choice", ("HL", "modifiedHL", "perturbed"))),
        "a": (None, "pos?"),
    },
    "perturbation": {
        "kind": ("zero", ("choice", ("zero", "cosine", "modified", "bump"))),
        "amplitude": (1.0, "float"),
        "mode": (1, "posint"),
        "c1_norm": (None, "pos?"),
        "a": (None, "pos?"),
    },
    "control": {
        "t_max": (1.0, "pos"),
        "cfl": (0.4, "pos"),
        "dt_min": (1e-10, "pos"),
        "bkm_stop": (20.0, "pos"),
        "dealias": (2.0 / 3.0, "pos"),
        "scheme": ("spectral", ("choice", ("spectral", "upwind2"))),
        "diag_every": (1, "posint"),
        "max_steps": (None, "posint?"),
    },
    "output": {
        "snapshot_every": (0, "nonnegint"),
    },
    "lemmas": {
        "L": (1.0, "pos"),
        "resolution": (400, "posint"),
        "a_values": ([0.01, 0.1, 1.0, 10.0], "poslist"),
        "refine": (True, "bool"),
    },
    "ode": {
        "C": (1.0, "pos"),
        "I0": (1.0, "pos"),
        "dt": (1e-3, "pos"),
        "I_cap": (1e12, "pos"),
    },
    "derive": {
        "L": (1.0, "pos"),
        "n_points": (20, "posint"),
        "n_max": (10000, "posint"),
        "n_quad": (10000, "posint"),
    },
    "sweep": {
        "grid": ({}, "grid"),
        "workers": (1, "posint"),
    },
}


class ConfigError(HouLuoError, ValueError):
    """Config problems, one (field, message) pair each."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = list(problems)
        super().__init__("; ".join(f"{k}: {m}" for k, m in self.problems))


def defaults(experiment: str = "simulate") -> dict:
    cfg = {"experiment": experiment}
    for sec, fields in SCHEMA.items():
        cfg[sec] = {k: copy.deepcopy(v[0]) for k, v in fields.items()}
    return cfg


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(kind, v, where, problems):
    """Return the coerced value, appending to ``problems`` on failure."""
    def bad(msg):
        problems.append((where, msg))
        return v

    if isinstance(kind, tuple) and kind[0] == "choice":
        return v if v in kind[1] else bad(f"must be one of {list(kind[1])}, got {v!r}")
    optional = kind.endswith("?")
    base = kind.rstrip("?")
    if v is None:
        return None if optional else bad("may not be null")
    if base == "bool":
        return v if isinstance(v, bool) else bad(f"must be true or false, got {v!r}")
    if base == "eps":
        if v == "auto":
            return v
        base = "pos"
    if base in ("float", "pos", "nonneg"):
        if isinstance(v, str):
            try:
                v = float(v)
            except ValueError:
                return bad(f"must be a number, got {v!r}")
        if not _is_num(v) or not math.isfinite(v):
            return bad(f"must be a finite number, got {v!r}")
        v = float(v)
        if base == "pos" and not v > 0:
            return bad(f"must be positive, got {v}")
        if base == "nonneg" and v < 0:
            return bad(f"must be non-negative, got {v}")
        return v
    if base in ("posint", "nonnegint", "even"):
        if not (isinstance(v, int) and not isinstance(v, bool)):
            return bad(f"must be an integer, got {v!r}")
        if base == "nonnegint" and v < 0:
            return bad(f"must be non-negative, got {v}")
        if base == "posint" and v < 1:
            return bad(f"must be positive, got {v}")
        if base == "even" and (v < 8 or v % 2):
            return bad(f"must be an even integer >= 8, got {v}")
        return v
    if base == "poslist":
        if not isinstance(v, list) or not v:
            return bad("must be a non-empty list")
        out = [_coerce("pos", x, f"{where}[{i}]", problems) for i, x in enumerate(v)]
        return out
    if base == "grid":
        if not isinstance(v, dict):
            return bad("must map dotted field names to lists of values")
        for key, vals in v.items():
            if not isinstance(vals, list) or not vals:
                problems.append((f"{where}.{key}", "must be a non-empty list"))
        return v
    raise AssertionError(kind)


def validate(raw: dict) -> dict:
    """Merge ``raw`` over the defaults and check every field."""
    problems: list[tuple[str, str]] = []
    if not isinstance(raw, dict):
        raise ConfigError([("<root>", "config must be a mapping")])
    exp = raw.get("experiment", "simulate")
    if exp not in EXPERIMENTS:
        problems.append(("experiment", f"must be one of {list(EXPERIMENTS)}, got {exp!r}"))
        exp = "simulate"
    cfg = defaults(exp)
    for sec, body in raw.items():
        if sec == "experiment":
            continue
        if sec not in SCHEMA:
            problems.append((sec, "unknown section"))
            continue
        if body is None:
            continue
        if not isinstance(body, dict):
            problems.append((sec, "must be a mapping"))
            continue
        for key, val in body.items():
            if key not in SCHEMA[sec]:
                problems.append((f"{sec}.{key}", "unknown field"))
                continue
            cfg[sec][key] = _coerce(SCHEMA[sec][key][1], val, f"{sec}.{key}", problems)
    _cross_checks(cfg, problems)
    if exp == "sweep":
        for key, vals in cfg["sweep"]["grid"].items():
            sec, _, fld = key.partition(".")
            if sec not in SCHEMA or fld not in SCHEMA[sec] or sec in ("sweep",):
                problems.append((f"sweep.grid.{key}", "not a sweepable field"))
                continue
            if isinstance(vals, list):
                for i, v in enumerate(vals):
                    _coerce(SCHEMA[sec][fld][1], v, f"sweep.grid.{key}[{i}]", problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def _cross_checks(cfg, problems):
    sc, ke, ctl = cfg["scenario"], cfg["kernel"], cfg["control"]
    if ke["family"] == "modifiedHL" and ke["a"] is None:
        problems.append(("kernel.a", "required for the modified kernel"))
    if ke["family"] != "modifiedHL" and ke["a"] is not None:
        problems.append(("kernel.a", "only meaningful for the modified kernel"))
    if sc["class"] == "sec4" and sc["eps"] is None:
        problems.append(("scenario.eps", "sec4 data needs eps (a number or 'auto')"))
    if sc["class"] != "sec4" and sc["eps"] is not None:
        problems.append(("scenario.eps", "only meaningful for sec4 data"))
    if _is_num(ctl["dealias"]) and not 0 < ctl["dealias"] <= 1:
        problems.append(("control.dealias", "must lie in (0, 1]"))
    pk = cfg["perturbation"]
    if pk["kind"] == "modified" and pk["a"] is None:
        problems.append(("perturbation.a", "required for the modified-kernel perturbation"))
    if sc["class"] == "realline" and pk["kind"] in ("cosine", "modified"):
        problems.append(("perturbation.kind", f"{pk['kind']} is periodic; real-line runs need zero or bump"))
    if sc["class"] != "realline" and pk["kind"] == "bump":
        problems.append(("perturbation.kind", "bump is a real-line perturbation"))


def load(path) -> dict:
    """Read and validate a YAML config file."""
    return validate(read_raw(path))


def read_raw(path) -> dict:
    """Parse a YAML config file without validating it (None gives {})."""
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError([("<file>", f"cannot read {p}: {exc.strerror}")]) from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([("<file>", f"not valid YAML: {exc}")]) from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError([("<root>", "config must be a mapping")])
    return raw


def set_dotted(cfg: dict, key: str, value) -> dict:
    out = copy.deepcopy(cfg)
    sec, _, fld = key.partition(".")
    out[sec][fld] = value
    return out


def sweep_points(cfg: dict) -> list[dict]:
    """Cartesian product of the sweep grid in declaration order (last key fastest)."""
    grid = cfg["sweep"]["grid"]
    keys = list(grid)
    if not keys:
        return [{}]
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def row_config(cfg: dict, point: dict) -> dict:
    """A simulate config for one sweep point, re-validated."""
    raw = copy.deepcopy(cfg)
    raw["experiment"] = "simulate"
    for k, v in point.items():
        raw = set_dotted(raw, k, v)
    raw["sweep"] = {"grid": {}, "workers": 1}
    return validate(raw)
