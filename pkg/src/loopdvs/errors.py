"""Exception hierarchy shared by the simulator, DSP and CLI."""


class DVSError(Exception):
    """Base class for all package errors."""


class ConfigError(DVSError, ValueError):
    """One or more configuration invariants are violated.

    ``errors`` holds one message per violation, each naming the field.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class MemoryCapError(DVSError, MemoryError):
    def __init__(self, what, required_bytes, cap_bytes):
        self.required_bytes = int(required_bytes)
        self.cap_bytes = int(cap_bytes)
        super().__init__(
            f"{what} needs {self.required_bytes} bytes, above the cap of "
            f"{self.cap_bytes} bytes (raise DVS_MEM_CAP_BYTES to at least "
            f"{self.required_bytes})"
        )


class TraceFormatError(DVSError, ValueError):
    """Base class for IQT decoding failures."""


class NotIQTError(TraceFormatError):
    pass


class UnsupportedVersionError(TraceFormatError):
    pass


class TruncatedTraceError(TraceFormatError):
    def __init__(self, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"expected {expected} samples, found {found}")


class DarkChannelError(DVSError, ValueError):
    pass


class DetectionError(DVSError):
    """Base class for localization failures (CLI exit code 1)."""


class NoEventDetected(DetectionError):
    def __init__(self, msg="no event detected"):
        super().__init__(msg)


class AmbiguousLocalization(DetectionError):
    """Correlation peak below the acceptance floor.

    ``candidate`` is the best guess: a ``(delay_s, peak)`` pair from the
    delay estimator, or a full ``LocalizationResult`` from the pipeline.
    """

    def __init__(self, candidate, peak, floor):
        self.candidate = candidate
        self.peak = peak
        self.floor = floor
        super().__init__(
            f"ambiguous localization: peak correlation {peak:.3f} below floor {floor:.3f}"
        )


class AnalysisError(DVSError, ValueError):
    pass
