"""Numpy implementations of the per-sample kernels.

These are the reference versions; ``_ckernels`` must agree with them.
"""
import numpy as np

TWO_PI = 2.0 * np.pi


def unwrap_phase(raw):
    raw = np.ascontiguousarray(raw, dtype=np.float64)
    if raw.size < 2:
        return raw.copy()
    d = np.diff(raw)
    step = (d < -np.pi).astype(np.int64) - (d > np.pi).astype(np.int64)
    turns = np.zeros(raw.size, dtype=np.int64)
    np.cumsum(step, out=turns[1:])
    return raw + TWO_PI * turns.astype(np.float64)


def iq_phase(i, q):
    i = np.ascontiguousarray(i, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    return unwrap_phase(np.arctan2(q, i))


def sliding_rms(x, window):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if window < 1 or window > x.size:
        raise ValueError(f"window must be in [1, {x.size}], got {window}")
    c = np.zeros(x.size + 1)
    np.cumsum(x * x, out=c[1:])
    ms = (c[window:] - c[:-window]) / window
    return np.sqrt(np.maximum(ms, 0.0))


def delayed_difference(increments, delay, n_out):
    """out[k] = theta[k] - theta[k + delay], theta = cumsum(increments)."""
    increments = np.ascontiguousarray(increments, dtype=np.float64)
    if increments.size < n_out + delay:
        raise ValueError("need at least n_out + delay increments")
    theta = np.cumsum(increments[: n_out + delay])
    return theta[:n_out] - theta[delay : delay + n_out]


def fir_valid(padded, taps):
    padded = np.ascontiguousarray(padded, dtype=np.float64)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    return np.convolve(padded, taps, mode="valid")
