"""Backend selection for the numerical hot loops.

The compiled extension ``irsadmm._kernels`` is used when it imports;
otherwise the numpy implementation in ``irsadmm._kernels_py`` takes
over. Set ``IRSADMM_BACKEND=python`` to force the fallback, or call
:func:`set_backend` at runtime (used by tests and the benchmark).
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    BACKENDS["cython"] = _kernels_c


def _default():
    want = os.environ.get("IRSADMM_BACKEND", "").strip().lower()
    if want:
        if want not in BACKENDS:
            raise ImportError(f"IRSADMM_BACKEND={want!r} is not available; have {sorted(BACKENDS)}")
        return want
    return "cython" if "cython" in BACKENDS else "python"


BACKEND = _default()
_impl = BACKENDS[BACKEND]


def set_backend(name):
    """Switch the active backend; returns the previous name."""
    global BACKEND, _impl
    if name not in BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}")
    prev, BACKEND, _impl = BACKEND, name, BACKENDS[name]
    return prev


def power_iteration(Z, max_iter=500, tol=1e-10):
    return _impl.power_iteration(Z, max_iter, tol)


def mm_solve(Z, q, theta0, zeta, max_iter, tol):
    return _impl.mm_solve(Z, q, theta0, float(zeta), int(max_iter), float(tol))


def quad_value(Z, q, theta):
    return _impl.quad_value(Z, q, theta)
