# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense kernel tables (OpenMP-parallel over rows)."""
import numpy as np

from ._rows import combine_increment_rows, combine_rows
from cython.parallel cimport prange
from libc.math cimport sin, log1p, atanh

cdef enum:
    F_PER = 0
    G_PER = 1
    K_PER = 2
    KX_PER = 3
    F_RL = 4
    G_RL = 5


# Per-point factors tan(mu x), tan(mu y) and sin(2 mu x) are computed once
# per row or column by the callers; only the pair-dependent sines stay in
# the inner loop (sin(mu (x - y)) is not split by an addition formula,
# which would lose relative accuracy near the diagonal).

cdef inline double _f_per(double x, double y, double tx, double ty, double a,
                          double mu) noexcept nogil:
    cdef double sp = sin(mu * (x + y))
    cdef double sm = sin(mu * (x - y))
    sp = sp * sp
    sm = sm * sm
    return ty / tx * (log1p(a / sp) - log1p(a / sm))


cdef inline double _g_per(double x, double y, double tx, double ty, double a,
                          double mu) noexcept nogil:
    cdef double sp = sin(mu * (x + y))
    cdef double sm = sin(mu * (x - y))
    cdef double cx = 1.0 / tx
    cdef double cy = 1.0 / ty
    cdef double bracket, rm, rp
    sp = sp * sp
    sm = sm * sm
    bracket = log1p(a / sp) - log1p(a / sm)
    rm = a / (sm + a)
    rp = a / (sp + a)
    return mu * (-(cx * cx + cy * cy + 2.0) * bracket
                 - 2.0 * cx * cy * (rm + rp) - 2.0 * (rm - rp))


cdef inline double _k_per(double tx, double ty) noexcept nogil:
    cdef double s = ty / tx
    cdef double m = s if s < 1.0 else 1.0 / s
    return 2.0 * s * atanh(m)


cdef inline double _kx_per(double tx, double ty, double s2x, double mu) noexcept nogil:
    cdef double s = ty / tx
    cdef double m = s if s < 1.0 else 1.0 / s
    cdef double dk = 2.0 * atanh(m) - 2.0 * s / (s * s - 1.0)
    return dk * (-2.0 * mu * s / s2x)


cdef inline double _f_rl(double x, double y, double a) noexcept nogil:
    cdef double dp = (x + y) * (x + y)
    cdef double dm = (x - y) * (x - y)
    return (y / x) * (log1p(a / dp) - log1p(a / dm))


cdef inline double _g_rl(double x, double y, double a) noexcept nogil:
    cdef double dp = (x + y) * (x + y)
    cdef double dm = (x - y) * (x - y)
    cdef double xy = x * y
    cdef double bracket = log1p(a / dp) - log1p(a / dm)
    return (-(1.0 / (x * x) + 1.0 / (y * y)) * bracket
            - 2.0 * a / (xy * (dm + a)) - 2.0 * a / (xy * (dp + a)))


cdef inline double _eval(int kind, double x, double y, double tx, double ty, double s2x,
                         double a, double mu) noexcept nogil:
    if kind == F_PER:
        return _f_per(x, y, tx, ty, a, mu)
    elif kind == G_PER:
        return _g_per(x, y, tx, ty, a, mu)
    elif kind == K_PER:
        return _k_per(tx, ty)
    elif kind == KX_PER:
        return _kx_per(tx, ty, s2x, mu)
    elif kind == F_RL:
        return _f_rl(x, y, a)
    return _g_rl(x, y, a)


def _factors(v, double mu):
    v = np.ascontiguousarray(v, dtype=np.float64)
    return np.tan(mu * v), np.sin(2.0 * mu * v)


def kernel_table(int kind, x, y, double a=0.0, double mu=1.0, int nthreads=1):
    """Table T[i, j] = kernel(x[i], y[j]); same contract as the numpy version."""
    if kind < 0 or kind > 5:
        raise ValueError(f"unknown kernel kind {kind}")
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    tx_np, s2x_np = _factors(xv, mu)
    ty_np, _ = _factors(yv, mu)
    cdef double[::1] tx = tx_np, s2x = s2x_np, ty = ty_np
    cdef Py_ssize_t nx = xv.shape[0], ny = yv.shape[0], i, j
    out = np.empty((nx, ny), dtype=np.float64)
    cdef double[:, ::1] o = out
    if nthreads < 1:
        nthreads = 1
    for i in prange(nx, nogil=True, num_threads=nthreads, schedule="static"):
        for j in range(ny):
            o[i, j] = _eval(kind, xv[i], yv[j], tx[i], ty[j], s2x[i], a, mu)
    return out


cdef inline bint _excluded(double x, double y, double delta, double upper, int region) noexcept nogil:
    cdef double d = delta * (1.0 - 1e-9)
    cdef double dxy = x - y
    if dxy < 0:
        dxy = -dxy
    if dxy < d or x < d or y < d:
        return True
    if upper > 0 and (x > upper - d or y > upper - d):
        return True
    if region == 1 and not (x < y):
        return True
    if region == 2 and not (y < x):
        return True
    return False


def scan_extremum(int kind, x, y, double a, double mu, double delta, double upper,
                  int region, bint find_max, double h=0.0, int nthreads=1):
    """Fused masked extremum over the product grid, no table allocated.

    Returns (value, i, j, n_included, n_excluded, n_nonfinite, mean_abs).
    Rows are reduced in parallel, then combined sequentially, so ties
    resolve to the first point in row-major order for any thread count.
    """
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    tx_np, s2x_np = _factors(xv, mu)
    txp_np, s2xp_np = _factors(np.asarray(xv) + h, mu)
    txm_np, s2xm_np = _factors(np.asarray(xv) - h, mu)
    ty_np, _ = _factors(yv, mu)
    cdef double[::1] tx = tx_np, s2x = s2x_np, ty = ty_np
    cdef double[::1] txp = txp_np, s2xp = s2xp_np, txm = txm_np, s2xm = s2xm_np
    cdef Py_ssize_t nx = xv.shape[0], ny = yv.shape[0], i, j
    row_best_np = np.full(nx, np.nan)
    row_arg_np = np.full(nx, -1, dtype=np.intp)
    row_cnt_np = np.zeros((nx, 3), dtype=np.intp)
    row_abs_np = np.zeros(nx)
    cdef double[::1] row_best = row_best_np
    cdef Py_ssize_t[::1] row_arg = row_arg_np
    cdef Py_ssize_t[:, ::1] row_cnt = row_cnt_np
    cdef double[::1] row_abs = row_abs_np
    cdef double v, best, acc
    cdef Py_ssize_t arg, n_in, n_ex, n_bad
    if nthreads < 1:
        nthreads = 1
    for i in prange(nx, nogil=True, num_threads=nthreads, schedule="static"):
        best = 0.0
        arg = -1
        acc = 0.0
        n_in = 0
        n_ex = 0
        n_bad = 0
        for j in range(ny):
            if _excluded(xv[i], yv[j], delta, upper, region):
                n_ex = n_ex + 1
                continue
            if h > 0:
                v = (_eval(kind, xv[i] + h, yv[j], txp[i], ty[j], s2xp[i], a, mu)
                     - _eval(kind, xv[i] - h, yv[j], txm[i], ty[j], s2xm[i], a, mu)) / (2.0 * h)
            else:
                v = _eval(kind, xv[i], yv[j], tx[i], ty[j], s2x[i], a, mu)
            if not (v == v) or v == 1.0 / 0.0 or v == -1.0 / 0.0:
                n_bad = n_bad + 1
                continue
            n_in = n_in + 1
            acc = acc + (v if v >= 0 else -v)
            if arg < 0 or (find_max and v > best) or ((not find_max) and v < best):
                best = v
                arg = j
        row_best[i] = best
        row_arg[i] = arg
        row_cnt[i, 0] = n_in
        row_cnt[i, 1] = n_ex
        row_cnt[i, 2] = n_bad
        row_abs[i] = acc
    return combine_rows(row_best_np, row_arg_np, row_cnt_np, row_abs_np, find_max)


def scan_a_increments(int kind, x, y, a_values, double mu, double delta, double upper,
                      int nthreads=1):
    """Smallest normalised forward difference in a,
    (T(a_{k+1}) - T(a_k)) / max(1, |T(a_k)|), over the masked product grid.

    Returns (value, i, j, k, n_included, n_excluded, n_nonfinite).
    """
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] av = np.ascontiguousarray(a_values, dtype=np.float64)
    tx_np, s2x_np = _factors(xv, mu)
    ty_np, _ = _factors(yv, mu)
    cdef double[::1] tx = tx_np, s2x = s2x_np, ty = ty_np
    cdef Py_ssize_t nx = xv.shape[0], ny = yv.shape[0], na = av.shape[0], i, j, k
    row_best_np = np.full(nx, np.nan)
    row_arg_np = np.full((nx, 2), -1, dtype=np.intp)
    row_cnt_np = np.zeros((nx, 3), dtype=np.intp)
    cdef double[::1] row_best = row_best_np
    cdef Py_ssize_t[:, ::1] row_arg = row_arg_np
    cdef Py_ssize_t[:, ::1] row_cnt = row_cnt_np
    cdef double prev, cur, d, best, scale
    cdef Py_ssize_t argj, argk, n_in, n_ex, n_bad
    cdef bint bad
    if nthreads < 1:
        nthreads = 1
    for i in prange(nx, nogil=True, num_threads=nthreads, schedule="static"):
        best = 0.0
        argj = -1
        argk = -1
        n_in = 0
        n_ex = 0
        n_bad = 0
        for j in range(ny):
            if _excluded(xv[i], yv[j], delta, upper, 0):
                n_ex = n_ex + 1
                continue
            bad = False
            prev = _eval(kind, xv[i], yv[j], tx[i], ty[j], s2x[i], av[0], mu)
            for k in range(1, na):
                cur = _eval(kind, xv[i], yv[j], tx[i], ty[j], s2x[i], av[k], mu)
                if not (cur == cur) or not (prev == prev) or cur == 1.0 / 0.0 or cur == -1.0 / 0.0:
                    bad = True
                    break
                scale = prev if prev >= 0 else -prev
                if scale < 1.0:
                    scale = 1.0
                d = (cur - prev) / scale
                if argj < 0 or d < best:
                    best = d
                    argj = j
                    argk = k - 1
                prev = cur
            if bad:
                n_bad = n_bad + 1
            else:
                n_in = n_in + 1
        row_best[i] = best
        row_arg[i, 0] = argj
        row_arg[i, 1] = argk
        row_cnt[i, 0] = n_in
        row_cnt[i, 1] = n_ex
        row_cnt[i, 2] = n_bad
    return combine_increment_rows(row_best_np, row_arg_np, row_cnt_np)
