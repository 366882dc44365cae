"""Domain types for the loop-back link, receiver and vibration events."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError

SPEED_OF_LIGHT = 299792458.0

#: Nominal spans of the reference loop: two 100 km and ten 80 km spans (1000 km).
#: The deployed fiber is about 1008 km, so these only validate against a
#: 500 km cable.
REFERENCE_SPANS_M = (100e3, 100e3) + (80e3,) * 10


@dataclass(frozen=True)
class LinkSpec:
    """Geometry and physics of one loop-back fiber pair.

    ``cable_length_m`` is the length of one fiber; the optical path through
    the loop is twice that.  ``osnr_db`` lumps the ASE of every amplified
    span into one figure at the receiver input (``inf`` disables ASE).
    """

    cable_length_m: float = 504e3
    group_index: float = 1.468
    wavelength_m: float = 1550e-9
    span_lengths_m: Optional[tuple] = None
    signal_power_w: float = 1e-3
    lo_power_w: float = 10e-3
    laser_linewidth_hz: float = 100.0
    osnr_db: float = 30.0

    @property
    def loop_length_m(self) -> float:
        return 2.0 * self.cable_length_m

    @property
    def loop_delay_s(self) -> float:
        """One-way time of flight through the whole loop, 2nL/c."""
        return self.group_index * self.loop_length_m / SPEED_OF_LIGHT


@dataclass(frozen=True)
class ReceiverSpec:
    responsivity_a_per_w: float = 0.9
    pol_power_ratio: float = 0.9
    pol_phase_offset_rad: float = 0.0
    sample_rate_hz: float = 100e6
    electrical_noise_std_a: float = 2e-6


@dataclass(frozen=True)
class VibrationEvent:
    """A sinusoidal PZT-like phase perturbation at one point of the cable.

    The waveform starts at ``start_time_s``; the optional ringing term
    ``transient_amplitude_rad * exp(-u / transient_decay_s) * sin(2 pi
    transient_freq_hz u)`` mimics the strain transient at onset.  A zero
    ringing amplitude, frequency or decay disables it.
    """

    cable_position_m: float = 0.0
    start_time_s: float = 5e-3
    frequency_hz: float = 1000.0
    phase_amplitude_rad: float = 2.5
    drive_voltage_v: float = 10.0
    transient_amplitude_rad: float = 10.0
    transient_freq_hz: float = 50e3
    transient_decay_s: float = 50e-6

    def phase(self, u):
        """Phase imparted by one fiber pass at event-relative time ``u`` (s)."""
        u = np.asarray(u, dtype=np.float64)
        active = u > 0.0
        ua = np.where(active, u, 0.0)
        out = self.phase_amplitude_rad * np.sin(2.0 * np.pi * self.frequency_hz * ua)
        if self.has_transient:
            out = out + (
                self.transient_amplitude_rad
                * np.exp(-ua / self.transient_decay_s)
                * np.sin(2.0 * np.pi * self.transient_freq_hz * ua)
            )
        return np.where(active, out, 0.0)

    @property
    def has_transient(self) -> bool:
        return (
            self.transient_amplitude_rad > 0
            and self.transient_freq_hz > 0
            and self.transient_decay_s > 0
        )


@dataclass(frozen=True)
class IQTrace:
    """Four-channel receiver capture, rows in the order Ix, Qx, Iy, Qy."""

    sample_rate_hz: float
    t0_s: float
    channels: np.ndarray

    def __post_init__(self):
        ch = np.asarray(self.channels)
        if ch.ndim != 2 or ch.shape[0] != 4:
            raise ValueError(f"channels must have shape (4, n), got {ch.shape}")
        if ch.shape[1] < 2:
            raise ValueError("a trace needs at least 2 samples")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be > 0")
        object.__setattr__(self, "channels", ch)

    @property
    def n_samples(self) -> int:
        return self.channels.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    ix = property(lambda self: self.channels[0])
    qx = property(lambda self: self.channels[1])
    iy = property(lambda self: self.channels[2])
    qy = property(lambda self: self.channels[3])

    def times(self):
        return self.t0_s + np.arange(self.n_samples) / self.sample_rate_hz


@dataclass(frozen=True)
class PhaseSeries:
    sample_rate_hz: float
    t0_s: float
    phase_rad: np.ndarray
    gradient_rad_per_sample: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "phase_rad", np.asarray(self.phase_rad, dtype=np.float64))
        g = self.gradient_rad_per_sample
        if g is not None:
            g = np.asarray(g, dtype=np.float64)
            if g.size != self.phase_rad.size - 1:
                raise ValueError("gradient must be one sample shorter than phase")
            object.__setattr__(self, "gradient_rad_per_sample", g)

    def __len__(self):
        return self.phase_rad.size

    def times(self):
        return self.t0_s + np.arange(self.phase_rad.size) / self.sample_rate_hz


@dataclass(frozen=True)
class LocalizationResult:
    delay_s: float
    separation_m: float
    fiber_tail_m: float
    cable_position_m: float
    peak_correlation: float = float("nan")
    first_burst_time_s: float = float("nan")
    second_burst_time_s: float = float("nan")
    in_range: bool = True


@dataclass(frozen=True)
class Config:
    """A validated link + receiver + events bundle."""

    link: LinkSpec = field(default_factory=LinkSpec)
    receiver: ReceiverSpec = field(default_factory=ReceiverSpec)
    events: tuple = ()


def _check_link(link, errors, index_bounds):
    lo, hi = index_bounds
    if not link.cable_length_m > 0:
        errors.append(f"cable_length_m must be > 0, got {link.cable_length_m}")
    if not lo <= link.group_index <= hi:
        errors.append(f"group_index out of [{lo}, {hi}], got {link.group_index}")
    if not link.wavelength_m > 0:
        errors.append(f"wavelength_m must be > 0, got {link.wavelength_m}")
    if link.span_lengths_m is not None:
        spans = link.span_lengths_m
        if len(spans) == 0:
            errors.append("span_lengths_m must not be empty when given")
        elif any(not s > 0 for s in spans):
            errors.append("span_lengths_m entries must be > 0")
        elif abs(sum(spans) - 2.0 * link.cable_length_m) > 1.0:
            errors.append(
                f"span_lengths_m sum {sum(spans)} differs from 2*cable_length_m "
                f"{2.0 * link.cable_length_m} by more than 1 m"
            )
    if not link.signal_power_w > 0:
        errors.append(f"signal_power_w must be > 0, got {link.signal_power_w}")
    if not link.lo_power_w > 0:
        errors.append(f"lo_power_w must be > 0, got {link.lo_power_w}")
    if not link.laser_linewidth_hz >= 0:
        errors.append(f"laser_linewidth_hz must be >= 0, got {link.laser_linewidth_hz}")
    if math.isnan(link.osnr_db):
        errors.append("osnr_db must be a number")


def _check_receiver(rx, errors):
    if not rx.responsivity_a_per_w > 0:
        errors.append(f"responsivity_a_per_w must be > 0, got {rx.responsivity_a_per_w}")
    if not 0.0 <= rx.pol_power_ratio <= 1.0:
        errors.append(f"pol_power_ratio out of [0,1], got {rx.pol_power_ratio}")
    if not rx.sample_rate_hz > 0:
        errors.append(f"sample_rate_hz must be > 0, got {rx.sample_rate_hz}")
    if not rx.electrical_noise_std_a >= 0:
        errors.append(
            f"electrical_noise_std_a must be >= 0, got {rx.electrical_noise_std_a}"
        )
    if not math.isfinite(rx.pol_phase_offset_rad):
        errors.append("pol_phase_offset_rad must be finite")


def _check_event(i, ev, link, errors):
    tag = f"events.{i}"
    if not 0.0 <= ev.cable_position_m <= link.cable_length_m:
        errors.append(
            f"{tag}.cable_position_m out of [0, {link.cable_length_m}], "
            f"got {ev.cable_position_m}"
        )
    if not ev.frequency_hz > 0:
        errors.append(f"{tag}.frequency_hz must be > 0, got {ev.frequency_hz}")
    for name in ("phase_amplitude_rad", "transient_amplitude_rad"):
        if not getattr(ev, name) >= 0:
            errors.append(f"{tag}.{name} must be >= 0, got {getattr(ev, name)}")
    for name in ("transient_freq_hz", "transient_decay_s"):
        if not getattr(ev, name) >= 0:
            errors.append(f"{tag}.{name} must be >= 0, got {getattr(ev, name)}")
    if not math.isfinite(ev.start_time_s):
        errors.append(f"{tag}.start_time_s must be finite")


def validate(link=None, receiver=None, events=(), index_bounds=(1.4, 1.5)):
    """Check every invariant and return a normalized :class:`Config`.

    Omitted spans default to a single span covering the whole loop.  All
    violations are collected and raised together as a :class:`ConfigError`.
    """
    link = link if link is not None else LinkSpec()
    receiver = receiver if receiver is not None else ReceiverSpec()
    events = tuple(events)
    errors = []
    _check_link(link, errors, index_bounds)
    _check_receiver(receiver, errors)
    for i, ev in enumerate(events):
        _check_event(i, ev, link, errors)
    if errors:
        raise ConfigError(errors)
    if link.span_lengths_m is None:
        link = replace(link, span_lengths_m=(2.0 * link.cable_length_m,))
    else:
        link = replace(link, span_lengths_m=tuple(float(s) for s in link.span_lengths_m))
    return Config(link=link, receiver=receiver, events=events)


def coherence_length(linewidth_hz, group_index):
    """Laser coherence length c / (n * linewidth) in meters."""
    if not linewidth_hz > 0:
        raise ValueError(
            f"undefined coherence length for linewidth {linewidth_hz} Hz (must be > 0)"
        )
    if not group_index > 0:
        raise ValueError("group_index must be > 0")
    return SPEED_OF_LIGHT / (group_index * linewidth_hz)
