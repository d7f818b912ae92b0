"""Sequential row-major combination of per-row scan reductions.

Shared by both backends so extremum ties resolve identically: the first
row (then first column) attaining the extremum wins.
"""
import numpy as np


def combine_rows(row_best, row_arg, row_cnt, row_abs, find_max):
    best = float("nan")
    bi = -1
    bj = -1
    for i in range(row_best.shape[0]):
        if row_arg[i] < 0:
            continue
        v = row_best[i]
        if bi < 0 or (find_max and v > best) or (not find_max and v < best):
            best = float(v)
            bi = i
            bj = int(row_arg[i])
    n_in = int(row_cnt[:, 0].sum())
    total = 0.0
    for v in row_abs:
        total += float(v)
    mean_abs = total / n_in if n_in else 0.0
    return (best, bi, bj, n_in, int(row_cnt[:, 1].sum()), int(row_cnt[:, 2].sum()), mean_abs)


def combine_increment_rows(row_best, row_arg, row_cnt):
    best = float("nan")
    bi = -1
    bj = -1
    bk = -1
    for i in range(row_best.shape[0]):
        if row_arg[i, 0] < 0:
            continue
        if bi < 0 or row_best[i] < best:
            best = float(row_best[i])
            bi = i
            bj = int(row_arg[i, 0])
            bk = int(row_arg[i, 1])
    return (best, bi, bj, bk, int(row_cnt[:, 0].sum()),
            int(row_cnt[:, 1].sum()), int(row_cnt[:, 2].sum()))


def row_reduce(table, use, find_max):
    """Per-row reductions of a masked table in the layout combine_rows expects."""
    n = table.shape[0]
    fill = -np.inf if find_max else np.inf
    masked = np.where(use, table, fill)
    arg = np.argmax(masked, axis=1) if find_max else np.argmin(masked, axis=1)
    has = use.any(axis=1)
    row_best = masked[np.arange(n), arg]
    row_arg = np.where(has, arg, -1)
    row_cnt = np.zeros((n, 3), dtype=np.intp)
    row_cnt[:, 0] = use.sum(axis=1)
    row_abs = np.where(use, np.abs(table), 0.0).sum(axis=1)
    return row_best, row_arg, row_cnt, row_abs
