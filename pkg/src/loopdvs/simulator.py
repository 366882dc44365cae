"""Synthetic receiver captures for the loop-back link.

The received phase is the residual laser phase noise of a source beaten
against its own loop-delayed copy, plus each vibration seen twice (once per
fiber pass), plus the constant propagation phase.  The field then goes
through the four-output coherent receiver model with lumped ASE and
per-channel electrical noise.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import MemoryCapError
from .link import SPEED_OF_LIGHT, Config, IQTrace, LinkSpec, VibrationEvent

#: OSNR reference bandwidth (0.1 nm at 1550 nm).
OSNR_REFERENCE_BW_HZ = 12.5e9
DEFAULT_MEM_CAP_BYTES = 4 * 2**30
# rough peak working set of simulate() per output sample
_BYTES_PER_SAMPLE = 112


def mem_cap_bytes():
    """Allocation cap from ``DVS_MEM_CAP_BYTES`` (default 4 GiB)."""
    raw = os.environ.get("DVS_MEM_CAP_BYTES")
    return int(raw) if raw else DEFAULT_MEM_CAP_BYTES


@dataclass
class SimState:
    """Random state of one capture.

    Independent child streams drive the laser, the ASE and the electrical
    noise, so switching one noise source off leaves the others unchanged.
    ``theta_laser_rad`` is the initial laser phase; it cancels in the
    homodyne beat and is kept only for completeness.
    """

    rng_seed: int
    theta_laser_rad: float = field(init=False)

    def __post_init__(self):
        seq = np.random.SeedSequence(self.rng_seed)
        laser, ase, elec, init = seq.spawn(4)
        self.laser_rng = np.random.default_rng(laser)
        self.ase_rng = np.random.default_rng(ase)
        self.electrical_rng = np.random.default_rng(elec)
        self.theta_laser_rad = float(np.random.default_rng(init).uniform(0.0, 2.0 * np.pi))


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def laser_residual_phase(duration_s, sample_rate_hz, linewidth_hz, path_delay_s, seed=None, mem_cap=None):
    """Phase noise left after beating the laser with a copy delayed by ``path_delay_s``.

    The laser phase is a Wiener process with per-sample increment variance
    ``2*pi*linewidth*dt``; the result is ``theta(t - tau) - theta(t)``,
    whose variance is ``2*pi*linewidth*tau``.
    """
    if not duration_s > 0 or not sample_rate_hz > 0:
        raise ValueError("duration_s and sample_rate_hz must be > 0")
    if linewidth_hz < 0:
        raise ValueError("linewidth_hz must be >= 0")
    n = int(round(duration_s * sample_rate_hz))
    delay = int(round(path_delay_s * sample_rate_hz))
    if linewidth_hz == 0 or delay == 0:
        return np.zeros(n)
    cap = mem_cap_bytes() if mem_cap is None else mem_cap
    need = 8 * (n + 2 * delay + 1)
    if need > cap:
        raise MemoryCapError("laser phase noise", need, cap)
    rng = _as_rng(seed)
    step = math.sqrt(2.0 * math.pi * linewidth_hz / sample_rate_hz)
    increments = rng.normal(0.0, step, n + delay)
    return kernels.delayed_difference(increments, delay, n)


def pass_delays(event: VibrationEvent, link: LinkSpec, sample_rate_hz=None):
    """Arrival delays (return pass, outbound pass) of a vibration at the receiver.

    The return fiber pass arrives first, after ``n z / c``; the outbound
    pass arrives ``2 n (L - z) / c`` later.  With ``sample_rate_hz`` both
    delays are snapped to the sample grid so that their difference is a whole
    number of samples.
    """
    n, L, z = link.group_index, link.cable_length_m, event.cable_position_m
    d_return = n * z / SPEED_OF_LIGHT
    separation = 2.0 * n * (L - z) / SPEED_OF_LIGHT
    if sample_rate_hz is None:
        return d_return, d_return + separation
    k_ret, k_sep = _delay_samples(event, link, sample_rate_hz)
    return k_ret / sample_rate_hz, (k_ret + k_sep) / sample_rate_hz


def _delay_samples(event, link, fs):
    n, L, z = link.group_index, link.cable_length_m, event.cable_position_m
    k_ret = int(round(n * z * fs / SPEED_OF_LIGHT))
    k_sep = int(round(2.0 * n * (L - z) * fs / SPEED_OF_LIGHT))
    return k_ret, k_sep


def burst_separation_samples(event, link, sample_rate_hz):
    return _delay_samples(event, link, sample_rate_hz)[1]


def vibration_phase_at_receiver(event: VibrationEvent, link: LinkSpec, t_s, sample_rate_hz=None):
    """Received phase of ``event`` at times ``t_s``: one term per fiber pass."""
    d_return, d_out = pass_delays(event, link, sample_rate_hz)
    t = np.asarray(t_s, dtype=np.float64)
    u0 = t - event.start_time_s
    return event.phase(u0 - d_return) + event.phase(u0 - d_out)


def _event_phase_on_grid(event, link, n, fs, t0_s):
    k_ret, k_sep = _delay_samples(event, link, fs)
    offset = t0_s - event.start_time_s
    k = np.arange(n, dtype=np.int64)
    # integer sample shifts keep both passes bit-identical copies of each other
    first = event.phase((k - k_ret) / fs + offset)
    out = first.copy()
    if k_sep < n:
        out[k_sep:] += first[: n - k_sep]
    return out


def propagation_phase(link: LinkSpec) -> float:
    """Constant phase ``2 pi n (2L) / lambda`` reduced to [0, 2 pi).

    Computed on exact rationals of the float inputs; the raw argument is of
    order 1e12 cycles where float64 keeps no useful fraction.
    """
    cycles = Fraction(link.group_index) * Fraction(link.loop_length_m) / Fraction(link.wavelength_m)
    return 2.0 * math.pi * float(cycles - math.floor(cycles))


def simulate(config: Config, duration_s, seed=0, t0_s=0.0, drift_amplitude_rad=0.0,
             drift_freq_hz=0.0, return_phase=False, mem_cap=None):
    """Generate one four-channel capture.

    Returns an :class:`IQTrace` with float64 channels; with ``return_phase``
    also the total injected phase ``(trace, phase)``.  Deterministic in
    ``(config, seed)``.
    """
    link, rx = config.link, config.receiver
    fs = rx.sample_rate_hz
    n = int(round(duration_s * fs))
    if n < 2:
        raise ValueError("capture needs at least 2 samples")
    cap = mem_cap_bytes() if mem_cap is None else mem_cap
    need = _BYTES_PER_SAMPLE * n
    if need > cap:
        raise MemoryCapError(f"a {n}-sample capture", need, cap)

    state = SimState(seed)
    phase = laser_residual_phase(
        duration_s, fs, link.laser_linewidth_hz, link.loop_delay_s, state.laser_rng, mem_cap=cap
    )[:n]
    if phase.size < n:
        phase = np.pad(phase, (0, n - phase.size))
    for ev in config.events:
        phase += _event_phase_on_grid(ev, link, n, fs, t0_s)
    if drift_amplitude_rad:
        t = t0_s + np.arange(n) / fs
        phase += drift_amplitude_rad * np.sin(2.0 * np.pi * drift_freq_hz * t)
    phase += propagation_phase(link)

    alpha = rx.pol_power_ratio
    ps = link.signal_power_w
    ex = math.sqrt(alpha * ps) * np.exp(1j * (phase + rx.pol_phase_offset_rad))
    ey = math.sqrt((1.0 - alpha) * ps) * np.exp(1j * phase)
    if math.isfinite(link.osnr_db):
        p_ase = ps * 10.0 ** (-link.osnr_db / 10.0) * fs / OSNR_REFERENCE_BW_HZ
        sigma = math.sqrt(p_ase / 4.0)
        rng = state.ase_rng
        ex += sigma * rng.standard_normal(n) + 1j * sigma * rng.standard_normal(n)
        ey += sigma * rng.standard_normal(n) + 1j * sigma * rng.standard_normal(n)

    scale = rx.responsivity_a_per_w * math.sqrt(link.lo_power_w / 2.0)
    channels = np.empty((4, n))
    channels[0] = scale * ex.real
    channels[1] = scale * ex.imag
    channels[2] = scale * ey.real
    channels[3] = scale * ey.imag
    del ex, ey
    if rx.electrical_noise_std_a > 0:
        channels += state.electrical_rng.normal(0.0, rx.electrical_noise_std_a, (4, n))

    trace = IQTrace(sample_rate_hz=fs, t0_s=t0_s, channels=channels)
    if return_phase:
        return trace, phase
    return trace
