"""Kernel backend selection.

The hot per-pixel kernels (stroke rasterization, Zhang-Suen thinning,
polyline simplification, chamfer distances) ship in two builds: a numba
@njit one and a vectorized pure-numpy fallback. Setting
``INKFORGE_PURE_NUMPY=1`` forces the fallback; it is also used when numba
cannot be imported. The choice is made once, at import time.

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

import os

_TRUTHY = {"1", "true", "yes", "on"}

PURE_NUMPY = os.environ.get("INKFORGE_PURE_NUMPY", "").strip().lower() in _TRUTHY

if PURE_NUMPY:
    HAVE_NUMBA = False
else:
    try:
        from numba import njit  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA


def backend_name() -> str:
    """Name of the active kernel backend, "numba" or "numpy"."""
    return "numba" if USE_NUMBA else "numpy"
