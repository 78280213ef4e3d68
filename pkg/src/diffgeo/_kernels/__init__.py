"""Backend selection for the hot kernels.

``DIFFGEO_BACKEND=numpy`` forces the pure-numpy path; the default is numba
when it imports, numpy otherwise.  ``DIFFGEO_THREADS`` caps numba's thread
pool (0 or unset = numba's default).

All kernels take C-contiguous float64 arrays: queries ``X (m, d)`` and
support ``P (n, d)``.
"""
import os
import warnings

import numpy as np

from . import _numpy

numpy_impl = _numpy

# An outdated system TBB only means numba falls back to another threading
# layer; the warning carries no information for users of this package.
warnings.filterwarnings("ignore", message="The TBB threading layer requires TBB")

try:
    from . import _numba

    numba_impl = _numba
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None
    NUMBA_AVAILABLE = False

_requested = os.environ.get("DIFFGEO_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"DIFFGEO_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and NUMBA_AVAILABLE) else "numpy"
_impl = numba_impl if BACKEND == "numba" else numpy_impl


def _apply_thread_cap():
    raw = os.environ.get("DIFFGEO_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("DIFFGEO_THREADS must be >= 0")
    if BACKEND == "numba" and n > 0:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


_apply_thread_cap()


def _prep(X, P):
    return np.ascontiguousarray(X, dtype=np.float64), np.ascontiguousarray(P, dtype=np.float64)


def sqdist(X, P):
    return _impl.sqdist(*_prep(X, P))


def softmax_weights(X, P, sigma, noise=None):
    X, P = _prep(X, P)
    if noise is not None:
        noise = np.ascontiguousarray(noise, dtype=np.float64)
    return _impl.softmax_weights(X, P, float(sigma), noise)


def denoise(X, P, sigma, noise=None):
    X, P = _prep(X, P)
    if noise is not None:
        noise = np.ascontiguousarray(noise, dtype=np.float64)
    return _impl.denoise(X, P, float(sigma), noise)


def logsumexp_kernel(X, P, sigma):
    return _impl.logsumexp_kernel(*_prep(X, P), float(sigma))


def nearest(X, P):
    return _impl.nearest(*_prep(X, P))
