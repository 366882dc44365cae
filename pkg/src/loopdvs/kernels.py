"""Kernel backend selection.

The compiled ``_ckernels`` extension provides the unwrapper and the
sliding RMS, which are sequential scans that numpy can only express
through extra temporaries.  Vectorised numpy stays faster for arctan2,
convolution and the cumulative-sum delayed difference, so those always use
``_kernels_py``.  Without the extension, or with ``LOOPDVS_PURE_PYTHON=1``,
everything runs on numpy.  ``BACKEND`` names the active implementation.
"""
import os

import numpy as np

from . import _kernels_py

_ext = None
if os.environ.get("LOOPDVS_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _ext
    except ImportError:
        _ext = None

BACKEND = "python" if _ext is None else "cython"

delayed_difference = _kernels_py.delayed_difference
fir_valid = _kernels_py.fir_valid

if _ext is None:
    unwrap_phase = _kernels_py.unwrap_phase
    sliding_rms = _kernels_py.sliding_rms
    iq_phase = _kernels_py.iq_phase
else:
    unwrap_phase = _ext.unwrap_phase
    sliding_rms = _ext.sliding_rms

    def iq_phase(i, q):
        """Unwrapped ``atan2(q, i)``; bit-identical to the numpy path."""
        return _ext.unwrap_phase(np.arctan2(np.asarray(q, np.float64), np.asarray(i, np.float64)))


__all__ = [
    "BACKEND",
    "unwrap_phase",
    "iq_phase",
    "sliding_rms",
    "delayed_difference",
    "fir_valid",
]
