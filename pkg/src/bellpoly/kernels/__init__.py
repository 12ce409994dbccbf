"""Hot numeric kernels with a numba and a pure-numpy implementation.

The backend is chosen once at import time from ``BELLPOLY_BACKEND``
(``numba``, the default, or ``numpy``).  If numba cannot be imported the numpy
path is used silently.  Both paths return identical results; the numpy path
exists as a readable reference and for platforms without numba.
"""
from __future__ import annotations

import os

from . import _numpy_impl

BACKEND = os.environ.get("BELLPOLY_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"BELLPOLY_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")

if BACKEND == "numba":
    try:
        from . import _numba_impl as _impl
    except ImportError:  # pragma: no cover - depends on environment
        BACKEND = "numpy"
        _impl = _numpy_impl
else:
    _impl = _numpy_impl

adjacent_pairs = _impl.adjacent_pairs
rank_mod_primes = _impl.rank_mod_primes
strategy_sweep = _impl.strategy_sweep


def get_impl(name: str):
    """Return the kernel module for ``name`` regardless of the active backend."""
    if name == "numpy":
        return _numpy_impl
    if name == "numba":
        from . import _numba_impl
        return _numba_impl
    raise ValueError(name)
