"""Loop-back forward-transmission vibration sensing: link simulator and DSP."""
from .kernels import BACKEND
from .link import (
    Config,
    IQTrace,
    LinkSpec,
    LocalizationResult,
    PhaseSeries,
    ReceiverSpec,
    VibrationEvent,
    coherence_length,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Config",
    "IQTrace",
    "LinkSpec",
    "LocalizationResult",
    "PhaseSeries",
    "ReceiverSpec",
    "VibrationEvent",
    "coherence_length",
    "validate",
]
