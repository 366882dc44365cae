"""Command-line front end: ``loopdvs sim | locate | analyze | sweep | replay``.

Exit codes: 0 success, 1 detection or analysis failure, 2 usage,
configuration or I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

import numpy as np

from . import analysis, config as configio, dsp, localizer, pipeline, simulator, sweep, traceio
from .errors import (
    AmbiguousLocalization,
    AnalysisError,
    ConfigError,
    DarkChannelError,
    DetectionError,
    MemoryCapError,
    TraceFormatError,
)
from .link import LinkSpec
from .manifest import RunManifest, sidecar_path

log = logging.getLogger("loopdvs")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _load_config(path, lenient=False):
    if path is None:
        return configio.default_config(), None
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    return configio.load(path, strict=not lenient), path


def _add_detector_flags(p):
    d = localizer.DetectorSpec()
    g = p.add_argument_group("detector")
    g.add_argument("--rms-window", type=int, default=d.rms_window_samples, help="sliding RMS window (samples)")
    g.add_argument("--trigger-factor", type=float, default=d.trigger_factor)
    g.add_argument("--pattern-pre-s", type=float, default=d.pattern_pre_s)
    g.add_argument("--pattern-post-s", type=float, default=d.pattern_post_s)
    g.add_argument("--search-min-s", type=float, default=d.search_min_s)
    g.add_argument("--search-max-s", type=float, default=None)
    g.add_argument("--min-peak-correlation", type=float, default=d.min_peak_correlation)
    g.add_argument("--baseline-fraction", type=float, default=d.baseline_fraction)
    f = p.add_argument_group("filter")
    f.add_argument("--cutoff-hz", type=float, default=None, help="low-pass -3 dB cutoff (default min(20 MHz, 0.2 fs))")
    f.add_argument("--taps", type=int, default=129)


def _detector(args):
    return localizer.DetectorSpec(
        rms_window_samples=args.rms_window,
        trigger_factor=args.trigger_factor,
        pattern_pre_s=args.pattern_pre_s,
        pattern_post_s=args.pattern_post_s,
        search_min_s=args.search_min_s,
        search_max_s=args.search_max_s,
        min_peak_correlation=args.min_peak_correlation,
        baseline_fraction=args.baseline_fraction,
    )


def _filter(args, fs):
    if args.cutoff_hz is None:
        return dataclasses.replace(dsp.FilterSpec.default_for(fs), taps=args.taps)
    return dsp.FilterSpec(args.cutoff_hz, args.taps)


def _manifest(args, argv, cfg, cfg_path, **kw):
    return RunManifest(
        subcommand=args.command,
        argv=list(argv),
        config_path=os.path.abspath(cfg_path) if cfg_path else None,
        config_text=configio.dumps(cfg) if cfg is not None else None,
        **kw,
    )


def cmd_sim(args, argv):
    cfg, cfg_path = _load_config(args.config, args.lenient)
    if args.duration_s <= 0:
        raise UsageError("--duration-s must be > 0")
    for i, ev in enumerate(cfg.events):
        _, d_out = simulator.pass_delays(ev, cfg.link)
        if ev.start_time_s + d_out >= args.duration_s:
            log.warning(
                "capture may miss second burst: event %d arrives at %.6f s on the outbound pass, "
                "capture ends at %.6f s", i, ev.start_time_s + d_out, args.duration_s,
            )
    trace = simulator.simulate(cfg, args.duration_s, seed=args.seed, t0_s=args.t0_s)
    traceio.write_trace(trace, args.out)
    man = _manifest(
        args, argv, cfg, cfg_path, seeds=[args.seed],
        output_dir=os.path.dirname(os.path.abspath(args.out)),
        params={"duration_s": args.duration_s, "t0_s": args.t0_s},
        outputs=[os.path.abspath(args.out)],
    )
    man.write(sidecar_path(args.out))
    print(f"wrote {args.out}: {trace.n_samples} samples at {trace.sample_rate_hz:g} S/s")
    return EXIT_OK


def _link_for_locate(args):
    if args.config:
        cfg, _ = _load_config(args.config, args.lenient)
        link = cfg.link
    else:
        link = LinkSpec()
    changes = {}
    if args.n is not None:
        changes["group_index"] = args.n
    if args.cable_length_m is not None:
        changes["cable_length_m"] = args.cable_length_m
    return dataclasses.replace(link, **changes)


def _read_trace(path):
    if not os.path.exists(path):
        raise UsageError(f"trace file not found: {path}")
    return traceio.read_trace(path)


def cmd_locate(args, argv):
    link = _link_for_locate(args)
    trace = _read_trace(args.trace)
    det = _detector(args)
    filt = _filter(args, trace.sample_rate_hz)
    raw, grad = pipeline.phase_gradient(trace, filt, args.pol)
    status = "ok"
    try:
        trig = localizer.detect_first_burst(grad, det)
    except DetectionError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    try:
        delay, peak = localizer.estimate_delay(grad, trig, det)
    except AmbiguousLocalization as exc:
        delay, peak = exc.candidate
        status = "ambiguous"
    res = localizer.delay_to_distance(delay, link, peak, trig, pipeline.RANGE_TOLERANCE_M)
    print(f"first burst      {res.first_burst_time_s * 1e3:.6f} ms")
    print(f"second burst     {res.second_burst_time_s * 1e3:.6f} ms")
    print(f"delay            {res.delay_s * 1e3:.7f} ms")
    print(f"separation       {res.separation_m:.1f} m")
    print(f"cable position   {res.cable_position_m:.1f} m" + ("" if res.in_range else "  (out of range)"))
    print(f"peak correlation {res.peak_correlation:.4f}")
    if args.csv:
        traceio.write_csv(args.csv, traceio.LOCALIZATION_COLUMNS, [
            {"trial": 0, "freq_hz": args.freq_hz, "delay_s": res.delay_s, "separation_m": res.separation_m,
             "cable_position_m": res.cable_position_m, "peak_correlation": res.peak_correlation}
        ])
        _manifest(args, argv, None, args.config, outputs=[os.path.abspath(args.csv)],
                  params={"trace": os.path.abspath(args.trace), "group_index": link.group_index}
                  ).write(sidecar_path(args.csv))
    if args.plot:
        _plot_locate(args.plot, raw, grad, trig, det)
    if status == "ambiguous":
        print(f"ambiguous localization: peak below {det.min_peak_correlation}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _plot_locate(out_dir, raw, grad, trig, det):
    from . import plots

    fs = grad.sample_rate_hz
    g = grad.gradient_rad_per_sample
    idx = int(round((trig - grad.t0_s) * fs))
    pre, post = int(round(det.pattern_pre_s * fs)), int(round(det.pattern_post_s * fs))
    start = max(idx - pre, 0)
    tpl = g[start: idx + post]
    lag0 = int(np.ceil(det.search_min_s * fs))
    ncc = localizer.normalized_xcorr(tpl, g[start + lag0:])
    plots.plot_localization(out_dir, raw, grad, (lag0 + np.arange(ncc.size)) / fs, ncc)


def cmd_analyze(args, argv):
    trace = _read_trace(args.trace)
    raw = dsp.demodulate(trace, pol=args.pol)
    start = args.steady_start_s if args.steady_start_s is not None else raw.t0_s
    seg = analysis.steady_segment(raw, start)
    sp = analysis.tone_spectrum(seg, args.freq_hz)
    print(f"peak frequency {sp.peak_freq_hz:.2f} Hz")
    print(f"SNR            {sp.snr_db:.2f} dB")
    amp = None
    try:
        amp = analysis.amplitude_of_vibration(seg, args.freq_hz)
        print(f"amplitude      {amp:.5f} rad")
    except AnalysisError as exc:
        print(f"amplitude      n/a ({exc})")
    if args.csv:
        traceio.write_csv(args.csv, ("freq_hz", "power_db"), zip(map(float, sp.freqs_hz), map(float, sp.power_db)))
        _manifest(args, argv, None, None, outputs=[os.path.abspath(args.csv)],
                  params={"trace": os.path.abspath(args.trace), "freq_hz": args.freq_hz,
                          "snr_db": sp.snr_db, "amplitude_rad": amp}).write(sidecar_path(args.csv))
    if args.plot:
        from . import plots

        plots.plot_spectrum(args.plot, {f"{args.freq_hz:g} Hz": sp})
    return EXIT_OK


def cmd_sweep(args, argv):
    cfg, cfg_path = _load_config(args.config, args.lenient)
    os.makedirs(args.out, exist_ok=True)
    det = _detector(args)
    filt = _filter(args, cfg.receiver.sample_rate_hz)
    outputs, seeds = [], set()

    loc_rows = []
    if args.freqs and args.trials > 0:
        jobs = []
        for f in args.freqs:
            for t in range(args.trials):
                jobs.append((cfg, f, args.seed + t, det, filt))
        results = sweep.run_ordered(sweep.localization_trial, jobs, args.workers)
        for i, r in enumerate(results):
            r["trial"] = i % args.trials
            seeds.add(r["seed"])
        loc_rows = results
        p = os.path.join(args.out, "trials.csv")
        traceio.write_csv(p, traceio.LOCALIZATION_COLUMNS + ("seed", "status"), loc_rows)
        outputs.append(p)
        summary = sweep.summarize_localization(loc_rows)
        p = os.path.join(args.out, "localization_summary.csv")
        traceio.write_csv(p, ("freq_hz", "count", "mean_m", "std_m"), summary)
        outputs.append(p)
        print("freq_hz  count  mean_m          std_m")
        for s in summary:
            mean = "n/a" if s["mean_m"] is None else f"{s['mean_m']:.1f}"
            std = "n/a" if s["std_m"] is None else f"{s['std_m']:.2f}"
            print(f"{s['freq_hz']:<8g} {s['count']:<6d} {mean:<15} {std}")

    if args.voltages:
        jobs = [(cfg, v, args.seed, args.linearity_freq_hz) for v in args.voltages]
        seeds.add(args.seed)
        pts = sweep.run_ordered(sweep.linearity_point, jobs, args.workers)
        pairs = [(p_["voltage_v"], p_["amplitude_rad"]) for p_ in pts]
        rows = [{"voltage_v": v, "amplitude_rad": a} for v, a in pairs]
        try:
            slope, intercept, r2 = analysis.linearity_fit(pairs)
            rows.append({"voltage_v": "fit", "amplitude_rad": "", "slope": slope, "intercept": intercept, "r_squared": r2})
            print(f"linearity: slope {slope:.5f} rad/V, intercept {intercept:.5f} rad, R^2 {r2:.6f}")
        except AnalysisError as exc:
            slope = intercept = r2 = None
            print(f"linearity: {exc}")
        p = os.path.join(args.out, "linearity.csv")
        traceio.write_csv(p, ("voltage_v", "amplitude_rad", "slope", "intercept", "r_squared"), rows)
        outputs.append(p)
        if args.plot and r2 is not None:
            from . import plots

            outputs.append(plots.plot_linearity(os.path.join(args.out, "linearity.png"), pairs, slope, intercept, r2))

    if args.snr_freqs:
        jobs = [(cfg, f, args.seed, args.snr_steady_s) for f in args.snr_freqs]
        seeds.add(args.seed)
        pts = sweep.run_ordered(sweep.snr_point, jobs, args.workers)
        p = os.path.join(args.out, "snr.csv")
        traceio.write_csv(p, ("freq_hz", "peak_freq_hz", "snr_db"), pts)
        outputs.append(p)
        for q in pts:
            p2 = os.path.join(args.out, f"spectrum_{q['freq_hz']:g}Hz.csv")
            sp = q["spectrum"]
            traceio.write_csv(p2, ("freq_hz", "power_db"), zip(map(float, sp.freqs_hz), map(float, sp.power_db)))
            outputs.append(p2)
        print("snr: " + ", ".join(f"{q['freq_hz']:g} Hz {q['snr_db']:.1f} dB" for q in pts))
        if args.plot:
            from . import plots

            outputs.append(plots.plot_spectrum(os.path.join(args.out, "spectra.png"),
                                               {f"{q['freq_hz']:g} Hz": q["spectrum"] for q in pts}))

    man = _manifest(
        args, argv, cfg, cfg_path, seeds=sorted(seeds), output_dir=os.path.abspath(args.out),
        params={k: v for k, v in vars(args).items() if k not in ("func",)},
        outputs=[os.path.basename(o) for o in outputs],
    )
    man.write(os.path.join(args.out, "manifest.json"))
    failed = [r for r in loc_rows if r["status"] != "ok"]
    if failed:
        print(f"{len(failed)} of {len(loc_rows)} localization trials failed", file=sys.stderr)
    return EXIT_OK


def cmd_replay(args, argv):
    """Re-run a sweep or sim from its manifest into a new output location."""
    man = RunManifest.read(args.manifest)
    os.makedirs(args.out, exist_ok=True)
    new_argv = list(man.argv)
    if man.config_text is not None:
        cfg_path = os.path.join(args.out, "config.ini")
        with open(cfg_path, "w", encoding="utf-8") as fh:
            fh.write(man.config_text)
        new_argv = _replace_flag(new_argv, "--config", cfg_path)
    if man.subcommand == "sweep":
        new_argv = _replace_flag(new_argv, "--out", args.out)
    elif man.subcommand == "sim":
        name = os.path.basename(man.outputs[0]) if man.outputs else "trace.iqt"
        new_argv = _replace_flag(new_argv, "--out", os.path.join(args.out, name))
    else:
        raise UsageError(f"cannot replay a {man.subcommand!r} manifest")
    return main(new_argv)


def _replace_flag(argv, flag, value):
    out, i, found = [], 0, False
    while i < len(argv):
        a = argv[i]
        if a == flag:
            out += [flag, value]
            i += 2
            found = True
            continue
        if a.startswith(flag + "="):
            out.append(f"{flag}={value}")
            found = True
        else:
            out.append(a)
        i += 1
    if not found:
        out += [flag, value]
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="loopdvs", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sim", help="simulate a capture and write an IQT trace")
    s.add_argument("--config", help="configuration file (defaults to the built-in 1008 km loop)")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--duration-s", type=float, default=12e-3)
    s.add_argument("--t0-s", type=float, default=0.0)
    s.add_argument("--lenient", action="store_true", help="warn on unknown config keys instead of failing")
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("locate", help="localize the vibration in a trace")
    s.add_argument("trace")
    s.add_argument("--config")
    s.add_argument("--n", type=float, default=None, help="group index override")
    s.add_argument("--cable-length-m", type=float, default=None)
    s.add_argument("--pol", choices=("x", "y", "max-power"), default="max-power")
    s.add_argument("--csv")
    s.add_argument("--freq-hz", type=float, default=None, help="frequency label for the CSV row")
    s.add_argument("--plot", metavar="DIR")
    s.add_argument("--lenient", action="store_true")
    _add_detector_flags(s)
    s.set_defaults(func=cmd_locate)

    s = sub.add_parser("analyze", help="phase spectrum, SNR and amplitude of a trace")
    s.add_argument("trace")
    s.add_argument("--freq-hz", type=float, required=True)
    s.add_argument("--steady-start-s", type=float, default=None)
    s.add_argument("--pol", choices=("x", "y", "max-power"), default="max-power")
    s.add_argument("--csv")
    s.add_argument("--plot", metavar="PNG")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sweep", help="batch trials: localization stats, linearity, SNR")
    s.add_argument("--config")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--freqs", type=_floats, default=[400.0, 1000.0, 10000.0])
    s.add_argument("--trials", type=int, default=8)
    s.add_argument("--voltages", type=_floats, default=[])
    s.add_argument("--linearity-freq-hz", type=float, default=10e3)
    s.add_argument("--snr-freqs", type=_floats, default=[])
    s.add_argument("--snr-steady-s", type=float, default=0.2)
    s.add_argument("--seed", type=int, default=0, help="base seed; trial k uses seed + k")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--plot", action="store_true")
    s.add_argument("--lenient", action="store_true")
    _add_detector_flags(s)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("replay", help="re-run a sim or sweep from its manifest")
    s.add_argument("manifest")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_replay)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args, argv)
    except (DetectionError, AnalysisError, DarkChannelError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, ConfigError, TraceFormatError, MemoryCapError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
