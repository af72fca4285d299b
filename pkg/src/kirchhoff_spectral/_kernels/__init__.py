"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time. Set ``KIRCHHOFF_SPECTRAL_JIT=0``
to force the numpy path; it is also used automatically when numba cannot
be imported. Every public function accepts ``backend="numpy"|"jit"`` to
override the default, which the tests and the benchmark use to compare
both paths.
"""

import os

import numpy as np

from . import _numpy
from ._tableau import STATUS_OK, STATUS_STALLED, STATUS_MAX_STEPS, STATUS_NONFINITE

try:
    from . import _jit
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _jit = None

_flag = os.environ.get("KIRCHHOFF_SPECTRAL_JIT", "1").strip().lower()
JIT_ENABLED = _jit is not None and _flag not in {"0", "false", "no", "off"}
DEFAULT_BACKEND = "jit" if JIT_ENABLED else "numpy"

__all__ = [
    "DEFAULT_BACKEND",
    "JIT_ENABLED",
    "STATUS_OK",
    "STATUS_STALLED",
    "STATUS_MAX_STEPS",
    "STATUS_NONFINITE",
    "resolve_backend",
    "dopri_integrate",
    "dopri_step",
    "mollify_batch",
    "logsumexp",
    "suffix_logsumexp",
]


def resolve_backend(backend=None):
    backend = backend or DEFAULT_BACKEND
    if backend not in ("jit", "numpy"):
        raise ValueError(f"unknown kernel backend {backend!r}")
    if backend == "jit" and _jit is None:
        raise RuntimeError("numba backend requested but numba is unavailable")
    return backend


def _compiled(nonlinearity, backend):
    return resolve_backend(backend) == "jit" and nonlinearity.code is not None


def dopri_integrate(nonlinearity, lam2, y0, t_end, rtol, atol, max_steps, backend=None):
    lam2 = np.ascontiguousarray(lam2, dtype=np.float64)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    # absolute tolerance may be given per component
    atol = np.ascontiguousarray(np.broadcast_to(np.asarray(atol, dtype=np.float64), y0.shape))
    if _compiled(nonlinearity, backend):
        return _jit.dopri_integrate(
            nonlinearity.code, float(nonlinearity.param), lam2, y0,
            float(t_end), float(rtol), atol, int(max_steps),
        )
    return _numpy.dopri_integrate(
        nonlinearity.m, lam2, y0, float(t_end), float(rtol), atol, int(max_steps)
    )


def dopri_step(nonlinearity, lam2, y, h, backend=None):
    """Single 5th-order step of size ``h`` from state ``y``."""
    lam2 = np.ascontiguousarray(lam2, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if _compiled(nonlinearity, backend):
        return _jit.dopri_step(nonlinearity.code, float(nonlinearity.param), lam2, y, float(h))[0]
    return _numpy.dopri_step(nonlinearity.m, lam2, y, float(h))[0]


def mollify_batch(samples, step, ts, eps, nodes, kweights, backend=None):
    args = (
        np.ascontiguousarray(samples, dtype=np.float64),
        float(step),
        np.ascontiguousarray(np.atleast_1d(ts), dtype=np.float64),
        float(eps),
        np.ascontiguousarray(nodes, dtype=np.float64),
        np.ascontiguousarray(kweights, dtype=np.float64),
    )
    if resolve_backend(backend) == "jit":
        return _jit.mollify_batch(*args)
    return _numpy.mollify_batch(*args)


def logsumexp(x, backend=None):
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    if resolve_backend(backend) == "jit":
        return float(_jit.logsumexp(x))
    return float(_numpy.logsumexp(x))


def suffix_logsumexp(x, backend=None):
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    if resolve_backend(backend) == "jit":
        return _jit.suffix_logsumexp(x)
    return _numpy.suffix_logsumexp(x)
