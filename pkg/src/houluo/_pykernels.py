"""Pure numpy implementation of the dense kernel tables.

Used when the compiled extension is unavailable or disabled through the
HOULUO_PURE_PYTHON environment variable.
"""
import numpy as np

from . import kernels as _k
from ._rows import combine_increment_rows, combine_rows, row_reduce

F_PER, G_PER, K_PER, KX_PER, F_RL, G_RL = range(6)


def kernel_table(kind, x, y, a=0.0, mu=1.0, nthreads=1):
    """Table T[i, j] = kernel(x[i], y[j]) evaluated from the closed form.

    Singular entries come out as inf/nan exactly as IEEE arithmetic gives
    them; callers mask them.
    """
    X = np.ascontiguousarray(x, dtype=float)[:, None]
    Y = np.ascontiguousarray(y, dtype=float)[None, :]
    with np.errstate(all="ignore"):
        if kind == F_PER:
            out = _k.F_periodic_values(X, Y, a, mu)
        elif kind == G_PER:
            out = _k.G_periodic_values(X, Y, a, mu)
        elif kind == K_PER:
            out = _k.K_values(X, Y, mu)
        elif kind == KX_PER:
            out = _k.Kx_values(X, Y, mu)
        elif kind == F_RL:
            out = _k.F_realline_values(X, Y, a)
        elif kind == G_RL:
            out = _k.G_realline_values(X, Y, a)
        else:
            raise ValueError(f"unknown kernel kind {kind}")
    return np.ascontiguousarray(np.broadcast_to(out, (X.shape[0], Y.shape[1])), dtype=float)


def exclusion_mask(x, y, delta, upper, region):
    """Boolean table, True where (x[i], y[j]) is skipped by a scan."""
    X = np.asarray(x, dtype=float)[:, None]
    Y = np.asarray(y, dtype=float)[None, :]
    d = delta * (1.0 - 1e-9)
    m = (np.abs(X - Y) < d) | (X < d) | (Y < d)
    if upper > 0:
        m |= (X > upper - d) | (Y > upper - d)
    if region == 1:
        m |= ~(X < Y)
    elif region == 2:
        m |= ~(Y < X)
    return m


def scan_extremum(kind, x, y, a, mu, delta, upper, region, find_max, h=0.0, nthreads=1):
    """Masked extremum over the product grid (table-based reference version).

    Returns (value, i, j, n_included, n_excluded, n_nonfinite, mean_abs).
    """
    x = np.asarray(x, dtype=float)
    if h > 0:
        t = (kernel_table(kind, x + h, y, a, mu) - kernel_table(kind, x - h, y, a, mu)) / (2.0 * h)
    else:
        t = kernel_table(kind, x, y, a, mu)
    excl = exclusion_mask(x, y, delta, upper, region)
    finite = np.isfinite(t)
    use = ~excl & finite
    row_best, row_arg, row_cnt, row_abs = row_reduce(t, use, find_max)
    row_cnt[:, 1] = excl.sum(axis=1)
    row_cnt[:, 2] = (~excl & ~finite).sum(axis=1)
    return combine_rows(row_best, row_arg, row_cnt, row_abs, find_max)


def scan_a_increments(kind, x, y, a_values, mu, delta, upper, nthreads=1):
    """Smallest normalised forward difference in a; see the compiled version.

    Returns (value, i, j, k, n_included, n_excluded, n_nonfinite).
    """
    excl = exclusion_mask(x, y, delta, upper, 0)
    prev = kernel_table(kind, x, y, a_values[0], mu)
    bad = ~np.isfinite(prev)
    best = np.full(prev.shape, np.inf)
    best_k = np.full(prev.shape, -1)
    for k in range(1, len(a_values)):
        cur = kernel_table(kind, x, y, a_values[k], mu)
        bad |= ~np.isfinite(cur)
        with np.errstate(invalid="ignore"):
            d = (cur - prev) / np.maximum(1.0, np.abs(prev))
        better = d < best
        best = np.where(better, d, best)
        best_k = np.where(better, k - 1, best_k)
        prev = cur
    use = ~excl & ~bad
    row_best, row_arg, row_cnt, _ = row_reduce(best, use, False)
    row_cnt[:, 1] = excl.sum(axis=1)
    row_cnt[:, 2] = (~excl & bad).sum(axis=1)
    rows = np.arange(best.shape[0])
    arg2 = np.stack([row_arg, np.where(row_arg >= 0, best_k[rows, np.maximum(row_arg, 0)], -1)], axis=1)
    return combine_increment_rows(row_best, arg2, row_cnt)
