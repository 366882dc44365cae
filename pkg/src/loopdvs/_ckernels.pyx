# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sequential scans: phase unwrapping and the sliding RMS.

Only kernels that beat their numpy counterparts live here; see
``benchmarks/bench_kernels.py``.
"""
import numpy as np

from libc.math cimport sqrt, M_PI

cdef double TWO_PI = 2.0 * M_PI


cdef void _unwrap_into(const double[::1] raw, double[::1] out) noexcept nogil:
    cdef Py_ssize_t k, n = raw.shape[0]
    cdef long long turns = 0
    cdef double d
    if n == 0:
        return
    out[0] = raw[0]
    for k in range(1, n):
        d = raw[k] - raw[k - 1]
        if d > M_PI:
            turns -= 1
        elif d < -M_PI:
            turns += 1
        out[k] = raw[k] + TWO_PI * <double>turns


def unwrap_phase(raw):
    cdef const double[::1] r = np.ascontiguousarray(raw, dtype=np.float64)
    out = np.empty(r.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        _unwrap_into(r, o)
    return out


def sliding_rms(x, Py_ssize_t window):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], k
    if window < 1 or window > n:
        raise ValueError(f"window must be in [1, {n}], got {window}")
    out = np.empty(n - window + 1, dtype=np.float64)
    cdef double[::1] o = out
    # Kahan-compensated running sum of squares
    cdef double s = 0.0, comp = 0.0, y, t, ms
    with nogil:
        for k in range(window):
            y = xv[k] * xv[k] - comp
            t = s + y
            comp = (t - s) - y
            s = t
        ms = s / window
        o[0] = sqrt(ms) if ms > 0.0 else 0.0
        for k in range(window, n):
            y = xv[k] * xv[k] - xv[k - window] * xv[k - window] - comp
            t = s + y
            comp = (t - s) - y
            s = t
            ms = s / window
            o[k - window + 1] = sqrt(ms) if ms > 0.0 else 0.0
    return out
