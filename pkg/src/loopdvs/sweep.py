"""Trial runners behind ``loopdvs sweep``.

Each runner is a picklable top-level function of (config, parameters, seed)
so trials can go to a process pool; results come back as plain dicts.
"""
from __future__ import annotations

import concurrent.futures as cf
import math
from dataclasses import replace

from . import analysis, dsp, pipeline, simulator
from .errors import AmbiguousLocalization, DetectionError, DVSError
from .link import Config, VibrationEvent
from .localizer import DetectorSpec, localization_statistics

LOCALIZATION_T0_S = 5e-3
SNR_T0_S = 1e-3


def base_event(config: Config) -> VibrationEvent:
    return config.events[0] if config.events else VibrationEvent()


def localization_capture_s(config: Config, det: DetectorSpec, margin_s=1e-3):
    """Capture long enough to hold the second burst plus the template."""
    end = 0.0
    for ev in config.events:
        _, d_out = simulator.pass_delays(ev, config.link)
        end = max(end, ev.start_time_s + d_out)
    return max(12e-3, end + det.pattern_post_s + det.pattern_pre_s + margin_s)


def localization_trial(config: Config, freq_hz, seed, det=None, filt=None, duration_s=None):
    det = det or DetectorSpec()
    ev = replace(base_event(config), frequency_hz=float(freq_hz), start_time_s=LOCALIZATION_T0_S)
    cfg = replace(config, events=(ev,))
    duration = duration_s or localization_capture_s(cfg, det)
    row = {"seed": seed, "freq_hz": float(freq_hz), "status": "ok"}
    try:
        trace = simulator.simulate(cfg, duration, seed=seed)
        res = pipeline.locate(trace, cfg.link, det, filt)
    except AmbiguousLocalization as exc:
        res = exc.candidate
        row["status"] = "ambiguous"
    except DetectionError as exc:
        row["status"] = str(exc)
        return row
    except DVSError as exc:
        row["status"] = f"error: {exc}"
        return row
    row.update(
        delay_s=res.delay_s,
        separation_m=res.separation_m,
        cable_position_m=res.cable_position_m,
        peak_correlation=res.peak_correlation,
        truth_separation_m=2.0 * (cfg.link.cable_length_m - ev.cable_position_m),
    )
    if not res.in_range:
        row["status"] = "out-of-range"
    return row


def linearity_point(config: Config, voltage_v, seed, freq_hz=10e3, steady_s=10e-3, filt=None):
    """Measured phase amplitude for a drive voltage; amplitude scales as V / V_ref."""
    ev0 = base_event(config)
    scale = voltage_v / ev0.drive_voltage_v
    ev = replace(
        ev0,
        frequency_hz=float(freq_hz),
        drive_voltage_v=float(voltage_v),
        phase_amplitude_rad=ev0.phase_amplitude_rad * scale,
        transient_amplitude_rad=ev0.transient_amplitude_rad * scale,
        start_time_s=LOCALIZATION_T0_S,
    )
    cfg = replace(config, events=(ev,))
    trace = simulator.simulate(cfg, analysis.capture_duration(cfg, steady_s), seed=seed)
    filt = filt or dsp.FilterSpec.default_for(trace.sample_rate_hz)
    phase = dsp.lowpass(dsp.demodulate(trace), filt)
    seg = analysis.steady_segment(phase, analysis.steady_state_start(cfg))
    return {"voltage_v": float(voltage_v), "seed": seed, "amplitude_rad": analysis.amplitude_of_vibration(seg, freq_hz)}


def snr_point(config: Config, freq_hz, seed, steady_s=0.2):
    ev = replace(base_event(config), frequency_hz=float(freq_hz), start_time_s=SNR_T0_S)
    cfg = replace(config, events=(ev,))
    steady = max(steady_s, analysis.spectral_span_s(freq_hz))
    trace = simulator.simulate(cfg, analysis.capture_duration(cfg, steady), seed=seed)
    raw = dsp.demodulate(trace)
    del trace
    sp = analysis.tone_spectrum(analysis.steady_segment(raw, analysis.steady_state_start(cfg)), freq_hz)
    return {"freq_hz": float(freq_hz), "seed": seed, "peak_freq_hz": sp.peak_freq_hz, "snr_db": sp.snr_db, "spectrum": sp}


def run_ordered(fn, jobs, workers=1):
    """Run ``fn(*job)`` for each job; results keep job order."""
    if workers <= 1:
        return [fn(*job) for job in jobs]
    with cf.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def summarize_localization(rows):
    """Per-frequency mean and spread of separations; std is None with fewer than 2 accepted trials."""
    out = []
    for f in sorted({r["freq_hz"] for r in rows}):
        ok = [r["separation_m"] for r in rows if r["freq_hz"] == f and r["status"] == "ok"]
        entry = {"freq_hz": f, "count": len(ok), "mean_m": None, "std_m": None}
        if len(ok) >= 2:
            entry["mean_m"], entry["std_m"], _ = localization_statistics(ok)
        elif ok:
            entry["mean_m"] = ok[0]
        out.append(entry)
    return out


def is_strictly_increasing(values):
    return all(b > a for a, b in zip(values, values[1:])) and not any(math.isnan(v) for v in values)
