# cython: language_level=3
"""Compiled sign-pattern enumeration kernels.

Every canonical pattern is addressed by ``code = lo | (hi << k_low)`` and its
combination vector is ``high[hi] + low[lo]``; the tables are built in Python.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()


def row_maxima(const double[:, ::1] low, const double[:, ::1] high, int num_threads=1):
    """Return, for each high index, the largest squared norm over all low indices."""
    cdef Py_ssize_t n_low = low.shape[0]
    cdef Py_ssize_t n_high = high.shape[0]
    cdef Py_ssize_t p = low.shape[1]
    cdef Py_ssize_t h, l, d
    cdef double s, t, best
    out = np.empty(n_high, dtype=np.float64)
    cdef double[::1] res = out
    if num_threads < 1:
        num_threads = 1
    for h in prange(n_high, nogil=True, schedule="static", num_threads=num_threads):
        best = -1.0
        for l in range(n_low):
            s = 0.0
            for d in range(p):
                t = high[h, d] + low[l, d]
                s = s + t * t
            if s > best:
                best = s
        res[h] = best
    return out


def collect_rows(const double[:, ::1] low, const double[:, ::1] high,
                 const long long[::1] rows, double threshold, int k_low):
    """Return codes and squared norms of patterns in ``rows`` reaching ``threshold``."""
    cdef Py_ssize_t n_low = low.shape[0]
    cdef Py_ssize_t p = low.shape[1]
    cdef Py_ssize_t i, l, d, count = 0
    cdef long long h
    cdef double s, t
    for i in range(rows.shape[0]):
        h = rows[i]
        for l in range(n_low):
            s = 0.0
            for d in range(p):
                t = high[h, d] + low[l, d]
                s = s + t * t
            if s >= threshold:
                count += 1
    codes = np.empty(count, dtype=np.int64)
    values = np.empty(count, dtype=np.float64)
    cdef long long[::1] c = codes
    cdef double[::1] v = values
    count = 0
    for i in range(rows.shape[0]):
        h = rows[i]
        for l in range(n_low):
            s = 0.0
            for d in range(p):
                t = high[h, d] + low[l, d]
                s = s + t * t
            if s >= threshold:
                c[count] = l | (h << k_low)
                v[count] = s
                count += 1
    return codes, values
