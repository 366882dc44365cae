"""Time the numpy fallback against the compiled extension.

Sizes match one 12 ms capture at 100 MS/s on the 1008 km loop.  Columns:
``numpy`` is ``_kernels_py``, ``active`` is what ``loopdvs.kernels``
dispatches to (compiled unwrap and sliding RMS when the extension is built).
Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.
"""
import argparse
import timeit

import numpy as np

from loopdvs import _kernels_py, kernels

N = 1_200_000
DELAY = 493_600


def cases(rng):
    raw = np.angle(np.exp(1j * np.cumsum(rng.normal(0.0, 1.0, N))))
    i, q = rng.normal(size=(2, N))
    g = rng.normal(size=N)
    inc = rng.normal(0.0, 2.5e-3, N + DELAY)
    padded = rng.normal(size=N + 128)
    taps = np.hamming(129) / np.hamming(129).sum()
    return {
        "unwrap_phase": lambda k: k.unwrap_phase(raw),
        "iq_phase": lambda k: k.iq_phase(i, q),
        "sliding_rms (w=1000)": lambda k: k.sliding_rms(g, 1000),
        "delayed_difference": lambda k: k.delayed_difference(inc, DELAY, N),
        "fir_valid (129 taps)": lambda k: k.fir_valid(padded, taps),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("numpy", _kernels_py), ("active", kernels)]
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<24}" + "".join(f"{name + ' ms':>14}" for name, _ in backends) + f"{'speedup':>10}")
    for name, fn in cases(np.random.default_rng(0)).items():
        times = [min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) * 1e3 for _, k in backends]
        speed = f"{times[0] / times[1]:>9.2f}x" if len(times) == 2 else ""
        print(f"{name:<24}" + "".join(f"{t:>14.2f}" for t in times) + speed)


if __name__ == "__main__":
    main()
