"""End-to-end helpers: trace -> phase -> gradient -> localization."""
from __future__ import annotations

from dataclasses import replace

from . import dsp, localizer
from .errors import AmbiguousLocalization
from .link import IQTrace, LinkSpec, LocalizationResult

#: Slack on the in-cable check; one spatial resolution cell of the system.
RANGE_TOLERANCE_M = 50.0


def phase_gradient(trace: IQTrace, filt=None, pol="max-power"):
    """Demodulate, low-pass and differentiate.  Returns (raw phase, filtered with gradient)."""
    filt = filt or dsp.FilterSpec.default_for(trace.sample_rate_hz)
    raw = dsp.demodulate(trace, pol=pol)
    return raw, dsp.gradient(dsp.lowpass(raw, filt))


def locate(trace: IQTrace, link: LinkSpec, det=None, filt=None, pol="max-power") -> LocalizationResult:
    """Full localization chain on one capture.

    Raises :class:`NoEventDetected` or :class:`AmbiguousLocalization`; the
    latter carries the best candidate as a :class:`LocalizationResult`.
    """
    det = det or localizer.DetectorSpec()
    _, grad = phase_gradient(trace, filt, pol)
    trigger = localizer.detect_first_burst(grad, det)
    try:
        delay, peak = localizer.estimate_delay(grad, trigger, det)
    except AmbiguousLocalization as exc:
        delay, peak = exc.candidate
        best = localizer.delay_to_distance(delay, link, peak, trigger, RANGE_TOLERANCE_M)
        raise AmbiguousLocalization(best, peak, exc.floor) from None
    return localizer.delay_to_distance(delay, link, peak, trigger, RANGE_TOLERANCE_M)


def detector_for_link(link: LinkSpec, det=None, margin=0.02):
    """Bound the lag search to the loop delay plus ``margin``."""
    det = det or localizer.DetectorSpec()
    if det.search_max_s is not None:
        return det
    return replace(det, search_max_s=link.loop_delay_s * (1.0 + margin))
