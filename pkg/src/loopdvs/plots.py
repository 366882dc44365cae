"""Optional PNG renderings of phase, gradient, correlation and spectra."""
from __future__ import annotations

import os

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise RuntimeError("--plot needs matplotlib (pip install loopdvs[plot])") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _decimated(t, y, max_points=200_000):
    step = max(1, y.size // max_points)
    return t[::step], y[::step]


def plot_localization(out_dir, raw, grad, ncc_lags_s=None, ncc=None):
    plt = _pyplot()
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    t = raw.times() * 1e3
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(*_decimated(t, raw.phase_rad), lw=0.6)
    ax.set(xlabel="time (ms)", ylabel="phase (rad)")
    paths.append(os.path.join(out_dir, "phase.png"))
    fig.tight_layout()
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    g = grad.gradient_rad_per_sample
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(*_decimated(t[: g.size], g), lw=0.4)
    ax.set(xlabel="time (ms)", ylabel="phase gradient (rad/sample)")
    paths.append(os.path.join(out_dir, "gradient.png"))
    fig.tight_layout()
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    if ncc is not None:
        fig, ax = plt.subplots(figsize=(8, 3))
        ax.plot(*_decimated(np.asarray(ncc_lags_s) * 1e3, np.asarray(ncc)), lw=0.6)
        ax.set(xlabel="lag (ms)", ylabel="normalized correlation")
        paths.append(os.path.join(out_dir, "correlation.png"))
        fig.tight_layout()
        fig.savefig(paths[-1], dpi=120)
        plt.close(fig)
    return paths


def plot_spectrum(path, spectra):
    """``spectra`` maps a label to a SpectrumResult."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4))
    for label, sp in spectra.items():
        ax.semilogx(sp.freqs_hz[1:], sp.power_db[1:], lw=0.7, label=label)
    ax.set(xlabel="frequency (Hz)", ylabel="phase PSD (dB rad$^2$/Hz)")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_linearity(path, pairs, slope, intercept, r2):
    plt = _pyplot()
    v = np.array([p[0] for p in pairs])
    a = np.array([p[1] for p in pairs])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(v, a, "o")
    ax.plot(v, slope * v + intercept, "-", label=f"R$^2$ = {r2:.4f}")
    ax.set(xlabel="drive voltage (V)", ylabel="phase amplitude (rad)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
