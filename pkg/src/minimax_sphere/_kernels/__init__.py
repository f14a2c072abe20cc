"""Backend selection for the sign-pattern enumeration kernels.

The compiled Cython module is used when it is importable; otherwise, or when
``MINIMAX_SPHERE_PURE_PYTHON`` is set, the numpy fallback is used.  Both expose
``row_maxima`` and ``collect_rows`` and give the same results.
"""
import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("MINIMAX_SPHERE_PURE_PYTHON"):
        raise ImportError("pure-Python backend requested")
    from . import _enum_cy as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active backend)."""
    name = BACKEND if name is None else name
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}")


def split_bits(n):
    """Number of low and high free sign bits for ``n`` points (first sign is fixed)."""
    free = max(n - 1, 0)
    k_low = free // 2
    return k_low, free - k_low


def subset_sums(vectors):
    """All signed sums of ``vectors``; bit j of the row index set means ``-vectors[j]``."""
    vectors = np.asarray(vectors, dtype=np.float64)
    table = np.zeros((1, vectors.shape[1]), dtype=np.float64)
    for w in vectors:
        table = np.concatenate([table + w, table - w])
    return table


def pattern_tables(points):
    """Low and high tables with ``high[hi] + low[lo]`` the combination of code ``lo | hi << k_low``."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    k_low, _ = split_bits(n)
    low = subset_sums(points[1:1 + k_low])
    high = subset_sums(points[1 + k_low:]) + points[0]
    return np.ascontiguousarray(low), np.ascontiguousarray(high), k_low
