"""Compiled vs numpy kernel backends: timings and agreement.

    python3 benchmarks/bench_kernels.py [--n 400 800] [--repeat 5] [--json out.json]

For each kernel and grid size it reports the best-of-``repeat`` wall time
of both backends, the speed-up and the largest scale-relative difference
between the two results. Without the compiled extension only the numpy
column is filled.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from houluo import _backend

KINDS = {
    "F_periodic": (_backend.F_PER, 0.1),
    "G_periodic": (_backend.G_PER, 0.1),
    "K": (_backend.K_PER, 0.0),
    "K_x": (_backend.KX_PER, 0.0),
    "F_realline": (_backend.F_RL, 0.1),
    "G_realline": (_backend.G_RL, 0.1),
}


def _best(fn, repeat):
    out, best = None, np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _rel_diff(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    both = np.isfinite(a) & np.isfinite(b)
    if not np.array_equal(np.isfinite(a), np.isfinite(b)):
        return float("inf")
    if not both.any():
        return 0.0
    scale = max(1.0, float(np.max(np.abs(a[both]))))
    return float(np.max(np.abs(a[both] - b[both]))) / scale


def bench(sizes, repeat):
    backends = list(_backend.BACKENDS)
    rows = []
    for n in sizes:
        upper = 0.5
        x = (np.arange(n) + 0.5) * (upper / n)
        mu = np.pi
        for name, (kind, a) in KINDS.items():
            if "realline" in name:
                xs, m = x * 4.0, 1.0
            else:
                xs, m = x, mu
            res = {}
            for be in backends:
                res[be] = _best(lambda: _backend.kernel_table(kind, xs, xs, a, m, backend=be), repeat)
            rows.append(_row("table", name, n, res))
            # fused masked scan (what the inequality checks spend their time on)
            res = {}
            for be in backends:
                res[be] = _best(lambda: _backend.scan_extremum(kind, xs, xs, a, m, upper / n,
                                                               xs[-1] + upper / n, 0, False,
                                                               backend=be), repeat)
            rows.append(_row("scan", name, n, res))
    return rows


def _row(op, name, n, res):
    py_t, py_out = res["python"]
    row = {"op": op, "kernel": name, "n": n, "python_s": py_t}
    if "cython" in res:
        cy_t, cy_out = res["cython"]
        row["cython_s"] = cy_t
        row["speedup"] = py_t / cy_t if cy_t > 0 else float("inf")
        if op == "table":
            row["max_rel_diff"] = _rel_diff(py_out, cy_out)
        else:
            row["max_rel_diff"] = abs(py_out[0] - cy_out[0]) / max(1.0, abs(py_out[0]))
    return row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[400, 800])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None, help="also write the rows as JSON")
    args = ap.parse_args(argv)
    rows = bench(args.n, args.repeat)
    print(f"backend in use: {_backend.BACKEND}")
    print(f"{'op':6s} {'kernel':11s} {'n':>5s} {'numpy [ms]':>11s} {'cython [ms]':>12s} "
          f"{'speed-up':>9s} {'rel diff':>9s}")
    for r in rows:
        cy = f"{1e3 * r['cython_s']:12.2f}" if "cython_s" in r else f"{'-':>12s}"
        sp = f"{r['speedup']:9.2f}" if "speedup" in r else f"{'-':>9s}"
        df = f"{r['max_rel_diff']:9.1e}" if "max_rel_diff" in r else f"{'-':>9s}"
        print(f"{r['op']:6s} {r['kernel']:11s} {r['n']:5d} {1e3 * r['python_s']:11.2f} {cy} {sp} {df}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
