"""IQ trace to phase: demodulation, low-pass filtering and phase gradient."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal

from . import kernels
from .errors import DarkChannelError
from .link import IQTrace, PhaseSeries

#: Mean |I + jQ| below which a polarization pair counts as dark, amperes.
DARK_FLOOR_A = 1e-7


@dataclass(frozen=True)
class FilterSpec:
    """Linear-phase FIR low-pass; ``cutoff_hz`` is the -3 dB frequency."""

    cutoff_hz: float = 20e6
    taps: int = 129

    def check(self, sample_rate_hz):
        if not 0.0 < self.cutoff_hz < sample_rate_hz / 2.0:
            raise ValueError(
                f"cutoff_hz must be in (0, {sample_rate_hz / 2.0}), got {self.cutoff_hz}"
            )
        if self.taps < 3 or self.taps % 2 == 0:
            raise ValueError(f"taps must be odd and >= 3, got {self.taps}")

    @classmethod
    def default_for(cls, sample_rate_hz):
        """20 MHz cutoff, capped at 0.2 fs for slower captures."""
        return cls(cutoff_hz=min(20e6, 0.2 * sample_rate_hz), taps=129)


def _pair(trace, pol):
    if pol == "x":
        return trace.ix, trace.qx
    if pol == "y":
        return trace.iy, trace.qy
    raise ValueError(f"pol must be 'x', 'y' or 'max-power', got {pol!r}")


def select_polarization(trace: IQTrace):
    px = np.mean(np.square(trace.ix, dtype=np.float64) + np.square(trace.qx, dtype=np.float64))
    py = np.mean(np.square(trace.iy, dtype=np.float64) + np.square(trace.qy, dtype=np.float64))
    return "x" if px >= py else "y"


def demodulate(trace: IQTrace, pol="max-power", dark_floor=DARK_FLOOR_A) -> PhaseSeries:
    """Unwrapped phase of ``I + jQ`` for one polarization pair.

    ``max-power`` takes the pair with the larger mean ``I^2 + Q^2`` (x on a
    tie).  The unwrapper adds -/+ 2 pi whenever consecutive raw phases jump
    by more than pi.
    """
    if pol == "max-power":
        pol = select_polarization(trace)
    i, q = _pair(trace, pol)
    i = np.asarray(i, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    magnitude = float(np.mean(np.hypot(i, q)))
    if magnitude < dark_floor:
        raise DarkChannelError(
            f"polarization channel dark: mean |{pol}| = {magnitude:.3g} A < floor {dark_floor:.3g} A"
        )
    return PhaseSeries(trace.sample_rate_hz, trace.t0_s, kernels.iq_phase(i, q))


@functools.lru_cache(maxsize=32)
def design_lowpass(cutoff_hz, taps, sample_rate_hz):
    """Hamming-windowed sinc with unity DC gain and |H(cutoff)| = 1/sqrt(2)."""
    FilterSpec(cutoff_hz, taps).check(sample_rate_hz)
    nyq = sample_rate_hz / 2.0
    target = 1.0 / math.sqrt(2.0)

    def kernel(f_design):
        return signal.firwin(taps, f_design, window="hamming", fs=sample_rate_hz)

    def excess(f_design):
        h = kernel(f_design)
        _, resp = signal.freqz(h, worN=[cutoff_hz], fs=sample_rate_hz)
        return abs(resp[0]) - target

    lo, hi = cutoff_hz * 0.5, min(cutoff_hz * 2.0, nyq * 0.999)
    if excess(lo) * excess(hi) > 0:
        # transition band too wide for an exact -3 dB point: fall back to sinc cutoff
        h = kernel(cutoff_hz)
    else:
        h = kernel(optimize.brentq(excess, lo, hi, xtol=1e-9 * cutoff_hz))
    # firwin is symmetric only to round-off; make linear phase exact
    h = 0.5 * (h + h[::-1])
    h.setflags(write=False)
    return h


def lowpass(series: PhaseSeries, filt: FilterSpec) -> PhaseSeries:
    """Zero-delay FIR low-pass of the phase.

    The (taps - 1) / 2 group delay is removed so events keep their time
    stamps; the ends are reflection-padded.
    """
    filt.check(series.sample_rate_hz)
    x = series.phase_rad
    if filt.taps >= x.size:
        raise ValueError(f"taps ({filt.taps}) must be shorter than the series ({x.size})")
    h = design_lowpass(float(filt.cutoff_hz), int(filt.taps), float(series.sample_rate_hz))
    half = (filt.taps - 1) // 2
    padded = np.pad(x, half, mode="reflect")
    return PhaseSeries(series.sample_rate_hz, series.t0_s, kernels.fir_valid(padded, h))


def gradient(series: PhaseSeries) -> PhaseSeries:
    """Attach the per-sample first difference ``phase[k+1] - phase[k]``."""
    if len(series) < 2:
        raise ValueError("gradient needs at least 2 samples")
    return PhaseSeries(series.sample_rate_hz, series.t0_s, series.phase_rad, np.diff(series.phase_rad))


def decimate(series: PhaseSeries, factor: int) -> PhaseSeries:
    """Anti-aliased integer downsampling via polyphase resampling."""
    if factor <= 1:
        return series
    y = signal.resample_poly(series.phase_rad, 1, int(factor))
    return PhaseSeries(series.sample_rate_hz / factor, series.t0_s, y)
