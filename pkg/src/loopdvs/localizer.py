"""Burst detection, correlation delay estimation and delay-to-position conversion."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal

from . import kernels
from .errors import AmbiguousLocalization, NoEventDetected
from .link import SPEED_OF_LIGHT, LinkSpec, LocalizationResult, PhaseSeries


@dataclass(frozen=True)
class DetectorSpec:
    """Trigger and correlation settings.

    The baseline RMS comes from the leading ``baseline_fraction`` of the
    capture, which must be free of vibration.  ``search_max_s=None`` lets
    the lag search run to the end of the trace.
    """

    rms_window_samples: int = 1000
    trigger_factor: float = 4.0
    pattern_pre_s: float = 1e-4
    pattern_post_s: float = 1e-3
    search_min_s: float = 1e-4
    search_max_s: Optional[float] = None
    min_peak_correlation: float = 0.3
    baseline_fraction: float = 0.1
    min_rms_rad: float = 1e-12

    def __post_init__(self):
        errors = []
        if not self.trigger_factor > 1:
            errors.append(f"trigger_factor must be > 1, got {self.trigger_factor}")
        if self.rms_window_samples < 1:
            errors.append("rms_window_samples must be >= 1")
        if not (self.pattern_pre_s >= 0 and self.pattern_post_s > 0):
            errors.append("pattern windows must be positive")
        if not self.search_min_s > 0:
            errors.append("search_min_s must be > 0")
        if self.search_max_s is not None and not self.search_min_s < self.search_max_s:
            errors.append("search_min_s must be < search_max_s")
        if not 0 <= self.min_peak_correlation <= 1:
            errors.append("min_peak_correlation must be in [0, 1]")
        if not 0 < self.baseline_fraction < 1:
            errors.append("baseline_fraction must be in (0, 1)")
        if errors:
            raise ValueError("; ".join(errors))


def _gradient_of(series):
    g = series.gradient_rad_per_sample
    if g is None:
        raise ValueError("series has no gradient; call dsp.gradient first")
    return g


def detect_first_burst_index(g, det: DetectorSpec, sample_rate_hz=None):
    g = np.asarray(g, dtype=np.float64)
    n_base = max(int(g.size * det.baseline_fraction), 1)
    baseline = math.sqrt(float(np.mean(g[:n_base] ** 2)))
    threshold = max(det.trigger_factor * baseline, det.min_rms_rad)
    window = min(det.rms_window_samples, g.size)
    rms = kernels.sliding_rms(g, window)
    above = np.flatnonzero(rms > threshold)
    if above.size == 0:
        raise NoEventDetected()
    # rms[j] covers g[j : j + window]; report the window's last sample
    return int(above[0]) + window - 1


def detect_first_burst(gradient: PhaseSeries, det: DetectorSpec) -> float:
    """Time of the first sliding-RMS threshold crossing in the gradient."""
    idx = detect_first_burst_index(_gradient_of(gradient), det)
    return gradient.t0_s + idx / gradient.sample_rate_hz


def normalized_xcorr(template, x):
    """Pearson correlation of ``template`` with every full-overlap window of ``x``.

    ``out[l]`` correlates ``template`` with ``x[l : l + len(template)]``.
    Windows with no variance score 0.
    """
    t = np.asarray(template, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    m = t.size
    t = t - t.mean()
    tn = float(np.linalg.norm(t))
    n_out = x.size - m + 1
    if n_out < 1 or tn == 0.0:
        return np.zeros(max(n_out, 0))
    num = signal.fftconvolve(x, t[::-1], mode="valid")
    c1 = np.zeros(x.size + 1)
    c2 = np.zeros(x.size + 1)
    np.cumsum(x, out=c1[1:])
    np.cumsum(x * x, out=c2[1:])
    s1 = c1[m:] - c1[:-m]
    s2 = c2[m:] - c2[:-m]
    var = np.maximum(s2 - s1 * s1 / m, 0.0)
    den = np.sqrt(var) * tn
    out = np.zeros(n_out)
    # FFT round-off swamps near-empty windows
    ok = den > 1e-9 * den.max() if den.size and den.max() > 0 else np.zeros(n_out, bool)
    out[ok] = num[ok] / den[ok]
    return np.clip(out, -1.0, 1.0)


def _pearson(t, w):
    t = t - t.mean()
    w = w - w.mean()
    den = math.sqrt(float(np.dot(t, t)) * float(np.dot(w, w)))
    return float(np.dot(t, w)) / den if den > 0 else 0.0


def parabolic_offset(y_left, y_mid, y_right):
    """Vertex offset in (-0.5, 0.5) of the parabola through three samples."""
    denom = y_left - 2.0 * y_mid + y_right
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (y_left - y_right) / denom, -0.5, 0.5))


def estimate_delay_samples(g, trigger_idx, det: DetectorSpec, fs):
    g = np.asarray(g, dtype=np.float64)
    pre = int(round(det.pattern_pre_s * fs))
    post = int(round(det.pattern_post_s * fs))
    start = max(trigger_idx - pre, 0)
    stop = min(trigger_idx + post, g.size)
    template = g[start:stop]
    m = template.size
    lag_min = int(math.ceil(det.search_min_s * fs))
    room = g.size - m - start
    if det.search_max_s is None:
        lag_max = room
    else:
        lag_max = int(math.floor(det.search_max_s * fs))
        if lag_max > room:
            raise ValueError(
                f"search window exceeds trace: lag {det.search_max_s} s needs "
                f"{start + lag_max + m} samples, trace has {g.size}"
            )
    if m < 3 or lag_max < lag_min:
        raise ValueError("search window exceeds trace")
    ncc = normalized_xcorr(template, g[start + lag_min : start + lag_max + m])
    i = int(np.argmax(ncc))  # first maximum: ties go to the smaller lag
    lag = lag_min + i

    def exact(l):
        return _pearson(template, g[start + l : start + l + m])

    peak = exact(lag)
    frac = 0.0
    # a perfect match cannot be beaten between samples
    if lag_min < lag < lag_max and peak < 1.0 - 1e-12:
        frac = parabolic_offset(exact(lag - 1), peak, exact(lag + 1))
    return lag + frac, peak


def estimate_delay(gradient: PhaseSeries, trigger_s, det: DetectorSpec):
    """Delay between the first burst and its best-correlated repeat.

    Returns ``(delay_s, peak_correlation)``; raises
    :class:`AmbiguousLocalization` when the peak is below
    ``det.min_peak_correlation``.
    """
    fs = gradient.sample_rate_hz
    g = _gradient_of(gradient)
    idx = int(round((trigger_s - gradient.t0_s) * fs))
    lag, peak = estimate_delay_samples(g, idx, det, fs)
    delay = lag / fs
    if peak < det.min_peak_correlation:
        raise AmbiguousLocalization((delay, peak), peak, det.min_peak_correlation)
    return delay, peak


def delay_to_distance(delay_s, link: LinkSpec, peak_correlation=float("nan"),
                      first_burst_time_s=float("nan"), tolerance_m=0.0) -> LocalizationResult:
    """Convert the burst delay into separation, fiber tail and cable position.

    Positions more than ``tolerance_m`` outside the cable are flagged with
    ``in_range=False`` rather than clamped.
    """
    if delay_s < 0:
        raise ValueError("delay must be >= 0")
    separation = SPEED_OF_LIGHT * delay_s / link.group_index
    tail = separation / 2.0
    position = link.cable_length_m - tail
    return LocalizationResult(
        delay_s=float(delay_s),
        separation_m=separation,
        fiber_tail_m=tail,
        cable_position_m=position,
        peak_correlation=float(peak_correlation),
        first_burst_time_s=float(first_burst_time_s),
        second_burst_time_s=float(first_burst_time_s + delay_s),
        in_range=bool(-tolerance_m <= tail <= link.cable_length_m + tolerance_m),
    )


def localization_statistics(results, ddof=0):
    """Mean, standard deviation and count of the separation distances.

    Accepts :class:`LocalizationResult` objects (out-of-range ones are
    dropped) or plain distances.  ``ddof=0`` divides by N, the convention
    behind the reference per-frequency spreads; pass ``ddof=1`` for the
    sample estimator.
    """
    values = []
    for r in results:
        if isinstance(r, LocalizationResult):
            if r.in_range:
                values.append(r.separation_m)
        else:
            values.append(float(r))
    if len(values) < 2:
        raise ValueError(f"need at least 2 accepted results, got {len(values)}")
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std(ddof=ddof)), arr.size
