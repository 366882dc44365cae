"""Spectral SNR, vibration amplitude, linearity and minimum detectable frequency."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from . import dsp, localizer, pipeline, simulator
from .errors import AnalysisError, DetectionError
from .link import Config, PhaseSeries, VibrationEvent


class AboveGridMaximum(AnalysisError):
    def __init__(self, grid_max):
        self.grid_max = grid_max
        super().__init__(f"above grid maximum ({grid_max} Hz)")


@dataclass(frozen=True)
class SpectrumResult:
    freqs_hz: np.ndarray
    power_db: np.ndarray
    peak_freq_hz: float
    snr_db: float


def phase_spectrum(series: PhaseSeries, segment_len, overlap=None, target_hz=None,
                   search_rel=0.1, noise_band=(0.5, 2.0), exclude_bins=3) -> SpectrumResult:
    """Hann-windowed averaged periodogram of the phase, in dB re 1 rad^2/Hz.

    The peak is the largest bin within ``search_rel`` of ``target_hz`` (or
    of the whole spectrum above DC).  ``snr_db`` is the peak bin over the
    median of the bins in ``noise_band`` (multiples of the peak frequency),
    skipping ``exclude_bins`` on each side of the peak.
    """
    x = series.phase_rad
    segment_len = int(segment_len)
    if segment_len > x.size:
        raise AnalysisError(f"segment of {segment_len} samples longer than series ({x.size})")
    if segment_len < 8:
        raise AnalysisError("segment_len must be >= 8")
    noverlap = segment_len // 2 if overlap is None else int(overlap)
    freqs, pxx = signal.welch(
        x, fs=series.sample_rate_hz, window="hann", nperseg=segment_len,
        noverlap=noverlap, detrend="constant", scaling="density",
    )
    idx = np.arange(freqs.size)
    if target_hz is None:
        cand = idx[1:]
    else:
        cand = idx[(freqs >= target_hz * (1 - search_rel)) & (freqs <= target_hz * (1 + search_rel))]
        if cand.size == 0:
            # resolution coarser than the search band: take the nearest bin
            cand = idx[[int(np.argmin(np.abs(freqs - target_hz)))]]
    ip = int(cand[np.argmax(pxx[cand])])
    fp = float(freqs[ip])
    lo, hi = noise_band
    noise = (freqs >= lo * fp) & (freqs <= hi * fp) & (np.abs(idx - ip) > exclude_bins) & (idx > 0)
    snr = float("nan")
    if noise.any():
        floor = float(np.median(pxx[noise]))
        if floor > 0:
            snr = 10.0 * math.log10(pxx[ip] / floor)
        elif pxx[ip] > 0:
            snr = float("inf")
    power_db = 10.0 * np.log10(np.maximum(pxx, 1e-300))
    return SpectrumResult(freqs, power_db, fp, snr)


def amplitude_of_vibration(series: PhaseSeries, freq_hz, band=0.2, order=4, min_cycles=10):
    """Half the mean peak-to-peak of the phase band-passed to ``freq_hz +/- band``.

    The band-pass rejects slow environmental drift.  Edges (two cycles plus
    the filter settling) are discarded before peaks are collected.
    """
    fs = series.sample_rate_hz
    cycles = len(series) / fs * freq_hz
    if cycles < min_cycles:
        raise AnalysisError(f"need >= {min_cycles} cycles of {freq_hz} Hz, series holds {cycles:.1f}")
    q = int(fs // (50.0 * freq_hz))
    if q > 1:
        series = dsp.decimate(series, q)
        fs = series.sample_rate_hz
    x = series.phase_rad
    sos = signal.butter(order, [freq_hz * (1 - band), freq_hz * (1 + band)], btype="bandpass", fs=fs, output="sos")
    y = signal.sosfiltfilt(sos, x)
    period = fs / freq_hz
    trim = int(round(2 * period + 0.05 * y.size))
    core = y[trim: y.size - trim] if y.size > 2 * trim + 3 * period else y
    dist = max(int(0.6 * period), 1)
    peaks, _ = signal.find_peaks(core, distance=dist)
    troughs, _ = signal.find_peaks(-core, distance=dist)
    if peaks.size == 0 or troughs.size == 0:
        return 0.0
    return float((core[peaks].mean() - core[troughs].mean()) / 2.0)


def linearity_fit(pairs):
    """Ordinary least squares of amplitude on voltage: (slope, intercept, r_squared)."""
    pairs = np.asarray(list(pairs), dtype=np.float64)
    if pairs.ndim != 2 or pairs.shape[0] < 3:
        raise AnalysisError("degenerate fit: need at least 3 (voltage, amplitude) pairs")
    v, a = pairs[:, 0], pairs[:, 1]
    if np.unique(v).size < 2:
        raise AnalysisError("degenerate fit: all voltages identical")
    vm, am = v.mean(), a.mean()
    slope = float(np.sum((v - vm) * (a - am)) / np.sum((v - vm) ** 2))
    intercept = float(am - slope * vm)
    ss_res = float(np.sum((a - (slope * v + intercept)) ** 2))
    ss_tot = float(np.sum((a - am) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return slope, intercept, r2


def settle_time(event: VibrationEvent):
    """Time after onset by which the ringing has decayed below 1e-6 of its start."""
    base = 0.5e-3
    if event.has_transient:
        return max(base, 14.0 * event.transient_decay_s)
    return base


def steady_state_start(config: Config):
    """Earliest time at which every event is in sinusoidal steady state on both passes."""
    fs = config.receiver.sample_rate_hz
    start = 0.0
    for ev in config.events:
        _, d_out = simulator.pass_delays(ev, config.link, fs)
        start = max(start, ev.start_time_s + d_out + settle_time(ev))
    return start


def steady_segment(series: PhaseSeries, start_s):
    i = int(math.ceil((start_s - series.t0_s) * series.sample_rate_hz))
    if i >= len(series) - 8:
        raise AnalysisError("capture ends before steady state")
    i = max(i, 0)
    return PhaseSeries(series.sample_rate_hz, series.t0_s + i / series.sample_rate_hz, series.phase_rad[i:])


def tone_spectrum(series: PhaseSeries, freq_hz, n_segments=2):
    """Spectrum near ``freq_hz`` after decimating to roughly 40x the tone."""
    q = int(series.sample_rate_hz // max(40.0 * freq_hz, 100e3))
    s = dsp.decimate(series, q) if q > 1 else series
    seg = len(s) // n_segments
    return phase_spectrum(s, seg, seg // 2, target_hz=freq_hz)


#: Steady-state cycles per tone spectrum: with two segments the noise band
#: then spans about 30 bins, so the median floor is not set by a few bins.
MIN_SPECTRAL_CYCLES = 40


def spectral_span_s(freq_hz):
    return MIN_SPECTRAL_CYCLES / float(freq_hz)


def capture_duration(config: Config, steady_s):
    return steady_state_start(config) + steady_s


def min_detectable_frequency(link, receiver, det=None, freq_grid=(100, 140, 200, 400), seed_count=5,
                             snr_floor_db=6.0, pass_fraction=0.8, event=None, steady_s=0.1, base_seed=0,
                             filt=None):
    """Lowest grid frequency detected (localized and above ``snr_floor_db``) for
    at least ``pass_fraction`` of the seeds.

    Seeds are shared across grid points so comparisons between links are
    paired.  Each grid point observes at least :data:`MIN_SPECTRAL_CYCLES`
    steady-state cycles.  Raises :class:`AboveGridMaximum` when nothing is
    detected.
    """
    grid = [float(f) for f in freq_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("freq_grid must be ascending")
    event = event or VibrationEvent()
    for f in grid:
        ev = replace(event, frequency_hz=f)
        cfg = Config(link, receiver, (ev,))
        duration = capture_duration(cfg, max(steady_s, spectral_span_s(f)))
        d = pipeline.detector_for_link(link, det)
        hits = 0
        for s in range(seed_count):
            trace = simulator.simulate(cfg, duration, seed=base_seed + s)
            if _detected(trace, cfg, d, f, snr_floor_db, filt):
                hits += 1
        if hits >= pass_fraction * seed_count:
            return f
    raise AboveGridMaximum(grid[-1])


def _detected(trace, cfg, det, freq_hz, snr_floor_db, filt):
    raw, grad = pipeline.phase_gradient(trace, filt)
    try:
        trig = localizer.detect_first_burst(grad, det)
        localizer.estimate_delay(grad, trig, det)
    except DetectionError:
        return False
    spec = tone_spectrum(steady_segment(raw, steady_state_start(cfg)), freq_hz)
    # a noise spike elsewhere in the search band is not the tone
    bin_hz = float(spec.freqs_hz[1] - spec.freqs_hz[0])
    return abs(spec.peak_freq_hz - freq_hz) <= bin_hz and spec.snr_db >= snr_floor_db
