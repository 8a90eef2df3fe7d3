"""Select the compiled core or the pure-Python fallback at import time.

Set ``PCAKRR_PURE=1`` to force the fallback.
"""

import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("PCAKRR_PURE") != "1":
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback
    else:
        BACKEND = "compiled"


def radial_matrix(xs, ys, code, gamma, backend=None):
    impl = _select(backend)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    return impl.radial_matrix(xs, ys, int(code), float(gamma))


def linear_assignment(cost, backend=None):
    impl = _select(backend)
    return impl.linear_assignment(np.ascontiguousarray(cost, dtype=np.float64))


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _fallback
    if backend == "compiled":
        if BACKEND != "compiled":
            raise RuntimeError("compiled core is not available")
        return _impl
    raise ValueError(f"unknown backend {backend!r}")
