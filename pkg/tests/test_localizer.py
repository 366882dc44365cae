import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopdvs import LinkSpec, PhaseSeries, ReceiverSpec, VibrationEvent, validate
from loopdvs.errors import AmbiguousLocalization, NoEventDetected
from loopdvs.localizer import (
    DetectorSpec,
    delay_to_distance,
    detect_first_burst,
    estimate_delay,
    estimate_delay_samples,
    localization_statistics,
    normalized_xcorr,
    parabolic_offset,
)
from loopdvs.pipeline import locate
from loopdvs.simulator import simulate

C = 299792458.0

REFERENCE_10KHZ = [1008166.2, 1008178.2, 1008182.4, 1008159.4, 1008150.2, 1008175.5, 1008170.6, 1008171.6]


def _series(g, fs):
    g = np.asarray(g, dtype=np.float64)
    return PhaseSeries(fs, 0.0, np.concatenate([[0.0], np.cumsum(g)]), g)


def _burst(t, onset):
    u = t - onset
    env = np.exp(-0.5 * ((u - 20e-6) / 6e-6) ** 2)
    return np.where(u > 0, env * np.sin(2 * np.pi * 150e3 * u), 0.0)


def test_all_zero_gradient():
    with pytest.raises(NoEventDetected, match="no event detected"):
        detect_first_burst(_series(np.zeros(10_000), 1e6), DetectorSpec())


def test_trigger_near_known_onset():
    fs = 1e7
    t = np.arange(int(12e-3 * fs)) / fs
    rng = np.random.default_rng(0)
    g = 1e-6 * rng.standard_normal(t.size) + 1e-2 * _burst(t, 5.000e-3)
    det = DetectorSpec()
    trig = detect_first_burst(_series(g, fs), det)
    assert abs(trig - 5.000e-3) <= det.rms_window_samples / fs


def test_exact_shifted_copy():
    fs = 1e6
    n = int(30e-3 * fs)
    rng = np.random.default_rng(1)
    g = np.zeros(n)
    pattern = rng.standard_normal(1200)
    start, lag = 5000, 9870
    g[start : start + 1200] = pattern
    g[start + lag : start + lag + 1200] = pattern
    det = DetectorSpec(rms_window_samples=10, pattern_pre_s=1e-5, pattern_post_s=1.1e-3, search_min_s=1e-3)
    s = _series(g, fs)
    trig = detect_first_burst(s, det)
    delay, peak = estimate_delay(s, trig, det)
    assert delay == pytest.approx(9.87e-3, abs=1e-12)
    assert peak == pytest.approx(1.0, abs=1e-12)


def test_reference_burst_times():
    fs = 1e7
    t = np.arange(int(12e-3 * fs)) / fs
    g = 1e-9 * np.random.default_rng(2).standard_normal(t.size)
    g += _burst(t, 5.000000e-3) + 0.8 * _burst(t, 9.9368140e-3)
    det = DetectorSpec(rms_window_samples=20)
    s = _series(g, fs)
    delay, peak = estimate_delay(s, detect_first_burst(s, det), det)
    assert delay == pytest.approx(4.9368140e-3, abs=2e-9)
    assert peak > 0.99


def _quiet_cfg(z, fs=1e7, **ev):
    link = LinkSpec(group_index=1.46803, laser_linewidth_hz=0.0, osnr_db=float("inf"))
    rx = ReceiverSpec(sample_rate_hz=fs, electrical_noise_std_a=0.0)
    return validate(link, rx, [VibrationEvent(cable_position_m=z, **ev)])


def test_noise_free_100km():
    cfg = _quiet_cfg(100e3)
    res = locate(simulate(cfg, 12e-3), cfg.link)
    link = cfg.link
    truth = 2 * link.group_index * (link.cable_length_m - 100e3) / C
    assert abs(res.delay_s - truth) <= 1 / 1e7
    assert res.in_range
    assert res.cable_position_m == pytest.approx(100e3, abs=C / (link.group_index * 1e7))


def test_first_trigger_follows_geometry():
    z = 150e3
    cfg = _quiet_cfg(z)
    res = locate(simulate(cfg, 12e-3), cfg.link)
    expected = cfg.events[0].start_time_s + 1.46803 * z / C
    # the zero-phase FIR leaks up to half its length ahead of the onset
    assert abs(res.first_burst_time_s - expected) <= 65 / 1e7


def test_first_trigger_with_default_noise():
    cfg = validate(LinkSpec(group_index=1.46803), ReceiverSpec(sample_rate_hz=1e7), [VibrationEvent()])
    res = locate(simulate(cfg, 12e-3, seed=4), cfg.link)
    assert abs(res.first_burst_time_s - 5e-3) < 1e-4


def test_delay_to_distance_examples():
    link = LinkSpec(group_index=1.46803)
    r = delay_to_distance(4.9368140e-3, link)
    # c T / n evaluated by hand: 1008167.14 m
    assert r.separation_m == pytest.approx(1008167.14, abs=0.01)
    r0 = delay_to_distance(0.0, link)
    assert r0.separation_m == 0.0 and r0.cable_position_m == link.cable_length_m and r0.in_range
    r = delay_to_distance(1e-6, LinkSpec(group_index=1.5))
    assert r.separation_m == pytest.approx(199.861, abs=1e-3)
    assert r.fiber_tail_m == pytest.approx(99.93, abs=0.01)
    with pytest.raises(ValueError):
        delay_to_distance(-1e-9, link)


def test_out_of_range_flagged_not_clamped():
    link = LinkSpec(cable_length_m=1000.0)
    r = delay_to_distance(2.5e-5, link)
    assert r.cable_position_m < 0 and not r.in_range
    assert delay_to_distance(2.5e-5, link, tolerance_m=5000).in_range


def test_statistics():
    mean, std, n = localization_statistics(REFERENCE_10KHZ)
    assert n == 8 and std == pytest.approx(9.802160157, abs=1e-6)
    assert mean == pytest.approx(np.mean(REFERENCE_10KHZ))
    assert localization_statistics([5.0, 5.0, 5.0])[1] == 0.0
    assert localization_statistics([1.0, 3.0], ddof=1)[1] == pytest.approx(np.sqrt(2))
    with pytest.raises(ValueError):
        localization_statistics([1.0])


def test_statistics_drop_out_of_range():
    link = LinkSpec(cable_length_m=1000.0)
    rs = [delay_to_distance(d, link) for d in (1e-6, 2e-6, 1.0)]
    assert localization_statistics(rs)[2] == 2


def _two_burst(seed, fs=1e6, n=20_000, lag=7321):
    rng = np.random.default_rng(seed)
    g = 1e-3 * rng.standard_normal(n)
    p = rng.standard_normal(800)
    g[3000:3800] += p
    g[3000 + lag : 3800 + lag] += 0.7 * p
    return g


DET = DetectorSpec(rms_window_samples=50, pattern_pre_s=5e-5, pattern_post_s=1e-3, search_min_s=1e-3)


@given(st.floats(1e-6, 1e6), st.integers(0, 50))
def test_scaling_invariance(scale, seed):
    g = _two_burst(seed)
    a = estimate_delay(_series(g, 1e6), detect_first_burst(_series(g, 1e6), DET), DET)
    b = estimate_delay(_series(scale * g, 1e6), detect_first_burst(_series(scale * g, 1e6), DET), DET)
    assert a[0] == pytest.approx(b[0], abs=1e-9 / 1e6)
    assert a[1] == pytest.approx(b[1], abs=1e-9)


@settings(max_examples=10)
@given(st.integers(0, 100))
def test_time_reversal(seed):
    fs = 1e6
    g = _two_burst(seed)
    fwd = estimate_delay_samples(g, 3000, DET, fs)[0]
    rev = g[::-1]
    # the later burst leads in reverse; its end sits at n - 3800 - lag
    det = DetectorSpec(rms_window_samples=50, pattern_pre_s=0, pattern_post_s=8e-4, search_min_s=1e-3)
    back = estimate_delay_samples(rev, rev.size - 3800 - 7321, det, fs)[0]
    assert abs(fwd - back) <= 1


def test_ties_go_to_smaller_lag():
    g = np.zeros(3000)
    p = np.array([1.0, -2.0, 1.5, 0.5])
    g[100:104] = p
    g[600:604] = p
    g[900:904] = p
    det = DetectorSpec(rms_window_samples=1, pattern_pre_s=0, pattern_post_s=4e-6, search_min_s=1e-4)
    lag, peak = estimate_delay_samples(g, 100, det, 1e6)
    assert lag == 500 and peak == pytest.approx(1.0)


def test_ambiguous_carries_candidate():
    rng = np.random.default_rng(5)
    g = 1e-3 * rng.standard_normal(30_000)
    g[3000:3800] += rng.standard_normal(800)
    s = _series(g, 1e6)
    det = DetectorSpec(rms_window_samples=50, pattern_pre_s=5e-5, pattern_post_s=1e-3, search_min_s=1e-3,
                       min_peak_correlation=0.9)
    with pytest.raises(AmbiguousLocalization, match="ambiguous localization") as exc:
        estimate_delay(s, detect_first_burst(s, det), det)
    delay, peak = exc.value.candidate
    assert delay > 0 and peak < 0.9 and exc.value.peak == peak


def test_search_window_exceeds_trace():
    g = _two_burst(0)
    det = DetectorSpec(rms_window_samples=50, search_max_s=1.0)
    with pytest.raises(ValueError, match="search window exceeds trace"):
        estimate_delay_samples(g, 3000, det, 1e6)


@pytest.mark.parametrize("bad", [dict(trigger_factor=1.0), dict(search_min_s=2e-3, search_max_s=1e-3),
                                 dict(min_peak_correlation=1.5), dict(rms_window_samples=0)])
def test_detector_spec_validation(bad):
    with pytest.raises(ValueError):
        DetectorSpec(**bad)


def test_normalized_xcorr_matches_direct():
    rng = np.random.default_rng(7)
    t, x = rng.standard_normal(50), rng.standard_normal(400)
    fast = normalized_xcorr(t, x)
    direct = [np.corrcoef(t, x[l : l + 50])[0, 1] for l in range(351)]
    np.testing.assert_allclose(fast, direct, atol=1e-10)
    assert not normalized_xcorr(t, np.ones(100)).any()


def test_parabolic_offset():
    # parabola -(x - 0.3)^2 sampled at -1, 0, 1
    y = [-(x - 0.3) ** 2 for x in (-1, 0, 1)]
    assert parabolic_offset(*y) == pytest.approx(0.3)
    assert parabolic_offset(1.0, 1.0, 1.0) == 0.0
