"""Selects the kernel-table implementation at import time.

The compiled extension is preferred; setting HOULUO_PURE_PYTHON=1 (or a
failed build) falls back to the numpy version. Both expose
``kernel_table(kind, x, y, a, mu, nthreads)``.
"""
import os

from . import _pykernels
from ._pykernels import F_PER, F_RL, G_PER, G_RL, K_PER, KX_PER  # noqa: F401

_compiled = None
if os.environ.get("HOULUO_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"
_impl = BACKENDS[BACKEND]
_threads = 1


def set_threads(n: int) -> None:
    """Worker threads for the compiled tables (ignored by the fallback)."""
    global _threads
    _threads = max(1, int(n))


def kernel_table(kind, x, y, a=0.0, mu=1.0, backend=None):
    impl = _impl if backend is None else BACKENDS[backend]
    return impl.kernel_table(kind, x, y, float(a), float(mu), _threads)


def scan_extremum(kind, x, y, a, mu, delta, upper, region, find_max, h=0.0, backend=None):
    impl = _impl if backend is None else BACKENDS[backend]
    return impl.scan_extremum(kind, x, y, float(a), float(mu), float(delta), float(upper),
                              int(region), bool(find_max), float(h), _threads)


def scan_a_increments(kind, x, y, a_values, mu, delta, upper, backend=None):
    impl = _impl if backend is None else BACKENDS[backend]
    return impl.scan_a_increments(kind, x, y, list(map(float, a_values)), float(mu),
                                  float(delta), float(upper), _threads)
