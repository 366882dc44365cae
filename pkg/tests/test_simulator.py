import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopdvs import LinkSpec, ReceiverSpec, VibrationEvent, validate
from loopdvs.dsp import demodulate, gradient
from loopdvs.errors import MemoryCapError
from loopdvs.simulator import (
    burst_separation_samples,
    laser_residual_phase,
    pass_delays,
    propagation_phase,
    simulate,
    vibration_phase_at_receiver,
)
from loopdvs.traceio import write_trace

C = 299792458.0


def _wrap(x):
    return np.angle(np.exp(1j * x))


def test_zero_linewidth_gives_zero_phase():
    out = laser_residual_phase(1e-3, 1e6, 0.0, 4.94e-3, seed=1)
    assert out.shape == (1000,) and not out.any()


def test_zero_delay_gives_zero_phase():
    assert not laser_residual_phase(1e-3, 1e6, 100.0, 0.0, seed=1).any()


def test_residual_variance_matches_wiener_prediction():
    # 10 s at 100 kS/s: 1e6 samples spanning ~2000 independent loop delays
    tau = 4.94e-3
    phase = laser_residual_phase(10.0, 1e5, 100.0, tau, seed=7)
    assert phase.size == 1_000_000
    expected = 2 * math.pi * 100.0 * tau
    assert expected == pytest.approx(3.10, abs=0.01)
    assert np.var(phase) == pytest.approx(expected, rel=0.10)


def test_residual_phase_memory_cap():
    with pytest.raises(MemoryCapError) as exc:
        laser_residual_phase(1e-3, 1e8, 100.0, 4.94e-3, seed=0, mem_cap=1000)
    assert exc.value.required_bytes > 1000
    assert "DVS_MEM_CAP_BYTES" in str(exc.value)


def test_simulate_memory_cap(monkeypatch):
    cfg = validate(events=[VibrationEvent()])
    monkeypatch.setenv("DVS_MEM_CAP_BYTES", "100000")
    with pytest.raises(MemoryCapError):
        simulate(cfg, 12e-3)


def test_causality():
    link, ev = LinkSpec(), VibrationEvent(cable_position_m=200e3)
    d_ret, _ = pass_delays(ev, link)
    t = np.linspace(0.0, ev.start_time_s + d_ret, 5000)[:-1]
    assert not vibration_phase_at_receiver(ev, link, t).any()
    assert vibration_phase_at_receiver(ev, link, [ev.start_time_s + d_ret + 1e-6])[0] != 0.0


def test_splice_merges_both_passes():
    link = LinkSpec()
    ev = VibrationEvent(cable_position_m=link.cable_length_m)
    d_ret, d_out = pass_delays(ev, link)
    assert d_ret == d_out
    t = np.linspace(0, 0.02, 20001)
    np.testing.assert_array_equal(
        vibration_phase_at_receiver(ev, link, t),
        2.0 * ev.phase(t - ev.start_time_s - link.group_index * link.cable_length_m / C),
    )
    assert burst_separation_samples(ev, link, 1e8) == 0


def test_near_end_separation():
    link = LinkSpec(group_index=1.46803)
    ev = VibrationEvent(cable_position_m=0.0)
    d_ret, d_out = pass_delays(ev, link)
    assert d_ret == 0.0
    assert d_out == pytest.approx(2 * 1.46803 * 504e3 / C, rel=1e-15)
    assert d_out == pytest.approx(4.935996e-3, abs=1e-9)
    # 2 n L fs / c = 493599.6 samples at 100 MS/s
    assert burst_separation_samples(ev, link, 1e8) == 493600
    # the reference delay 4.9368140 ms agrees to 2e-4 relative
    assert d_out == pytest.approx(4.9368140e-3, rel=2e-4)


def test_constant_phase_reduction_exact():
    link = LinkSpec(cable_length_m=1000.0, group_index=1.5, wavelength_m=0.5)
    # 2 n (2L) / lambda = 6000 whole cycles
    assert propagation_phase(link) == 0.0
    link = LinkSpec(cable_length_m=1000.125, group_index=1.5, wavelength_m=0.5)
    assert propagation_phase(link) == pytest.approx(2 * math.pi * 0.75, abs=1e-12)
    assert 0.0 <= propagation_phase(LinkSpec()) < 2 * math.pi


def _quiet(alpha=0.9, **link_kw):
    link = LinkSpec(laser_linewidth_hz=0.0, osnr_db=float("inf"), **link_kw)
    delta = -propagation_phase(link)
    return link, ReceiverSpec(pol_power_ratio=alpha, pol_phase_offset_rad=delta, electrical_noise_std_a=0.0)


def test_full_x_polarization_at_zero_phase():
    link, rx = _quiet(alpha=1.0)
    # no events and delta cancelling the propagation constant leaves zero phase on X
    tr = simulate(validate(link, rx, []), 1e-5, seed=3)
    expected = rx.responsivity_a_per_w * math.sqrt(link.signal_power_w * link.lo_power_w / 2)
    np.testing.assert_allclose(tr.ix, expected, rtol=1e-15)
    np.testing.assert_allclose(tr.qx, 0.0, atol=1e-15 * expected)
    assert not tr.iy.any() and not tr.qy.any()


def test_equal_split_balances_power():
    link, rx = _quiet(alpha=0.5)
    tr = simulate(validate(link, rx, [VibrationEvent(start_time_s=1e-5)]), 2e-4, seed=0)
    np.testing.assert_allclose(tr.ix**2 + tr.qx**2, tr.iy**2 + tr.qy**2, rtol=1e-13)


@settings(max_examples=20)
@given(st.floats(0, 1), st.floats(-10, 10), st.integers(0, 2**32))
def test_energy_invariant(alpha, delta, seed):
    link = LinkSpec(laser_linewidth_hz=0.0, osnr_db=float("inf"))
    rx = ReceiverSpec(pol_power_ratio=alpha, pol_phase_offset_rad=delta, electrical_noise_std_a=0.0)
    cfg = validate(link, rx, [VibrationEvent(start_time_s=1e-5, frequency_hz=2e4)])
    tr = simulate(cfg, 2e-4, seed=seed)
    total = np.sum(tr.channels**2, axis=0)
    expect = rx.responsivity_a_per_w**2 * link.lo_power_w / 2 * link.signal_power_w
    assert np.max(np.abs(total / expect - 1)) < 1e-12


def test_energy_invariant_with_laser_noise():
    # phase noise only rotates the field, so power is still constant
    link = LinkSpec(osnr_db=float("inf"))
    rx = ReceiverSpec(electrical_noise_std_a=0.0, sample_rate_hz=1e6)
    tr = simulate(validate(link, rx, [VibrationEvent()]), 12e-3, seed=2)
    total = np.sum(tr.channels**2, axis=0)
    assert np.ptp(total) / total.mean() < 1e-12


def test_determinism_bytes(tmp_path):
    cfg = validate(receiver=ReceiverSpec(sample_rate_hz=1e7), events=[VibrationEvent()])
    a, b = simulate(cfg, 6e-3, seed=11), simulate(cfg, 6e-3, seed=11)
    write_trace(a, tmp_path / "a.iqt")
    write_trace(b, tmp_path / "b.iqt")
    assert (tmp_path / "a.iqt").read_bytes() == (tmp_path / "b.iqt").read_bytes()
    c = simulate(cfg, 6e-3, seed=12)
    assert c.channels.tobytes() != a.channels.tobytes()


def _onsets(g, k_sep, thr=1e-9):
    hits = np.flatnonzero(np.abs(g) > thr)
    first = hits[0]
    second = hits[hits > first + k_sep // 2][0]
    return first, second


@settings(max_examples=12)
@given(z_frac=st.floats(0.0, 0.8), fs=st.sampled_from([1e7, 2.5e7, 1e8]))
def test_geometry_invariant(z_frac, fs):
    # pure decaying ringing: first burst is gone (exp(-40)) long before the second starts
    link = LinkSpec(laser_linewidth_hz=0.0, osnr_db=float("inf"))
    rx = ReceiverSpec(sample_rate_hz=fs, electrical_noise_std_a=0.0)
    ev = VibrationEvent(cable_position_m=z_frac * link.cable_length_m, start_time_s=2e-4,
                        phase_amplitude_rad=0.0, transient_decay_s=20e-6)
    k_sep = int(round(2 * link.group_index * (link.cable_length_m - ev.cable_position_m) * fs / C))
    trace = simulate(validate(link, rx, [ev]), 2e-4 + 3e-3 + k_sep / fs, seed=0)
    first, second = _onsets(gradient(demodulate(trace)).gradient_rad_per_sample, k_sep)
    assert second - first == k_sep


def test_two_abrupt_shifts_then_steady_sine():
    link, rx = _quiet(group_index=1.46803)
    ev = VibrationEvent(frequency_hz=400.0)
    trace, injected = simulate(validate(link, rx, [ev]), 12e-3, seed=0, return_phase=True)
    ph = demodulate(trace)
    err = _wrap(ph.phase_rad - injected)
    assert np.sqrt(np.mean((err - err.mean()) ** 2)) < 1e-9
    g = np.abs(gradient(ph).gradient_rad_per_sample)
    fs = rx.sample_rate_hz
    k0 = int(round(ev.start_time_s * fs))
    k_sep = burst_separation_samples(ev, link, fs)
    quiet = g[: k0 - 10].max()
    b1 = g[k0 : k0 + 2000].max()
    b2 = g[k0 + k_sep : k0 + k_sep + 2000].max()
    steady = g[k0 + int(14 * ev.transient_decay_s * fs) : k0 + k_sep - 10].max()
    assert quiet < 1e-9
    assert b1 > 50 * steady and b2 > 50 * steady


def test_osnr_monotone():
    link_kw = dict(laser_linewidth_hz=0.0)
    rx = ReceiverSpec(sample_rate_hz=1e7, electrical_noise_std_a=0.0)
    mses = []
    for osnr in (5.0, 10.0, 20.0, 30.0, 40.0):
        cfg = validate(LinkSpec(osnr_db=osnr, **link_kw), rx, [VibrationEvent(start_time_s=1e-4)])
        vals = []
        for seed in range(4):
            tr, inj = simulate(cfg, 1e-3, seed=seed, return_phase=True)
            err = _wrap(demodulate(tr).phase_rad - inj)
            vals.append(np.mean(err**2))
        mses.append(np.mean(vals))
    assert all(b < a for a, b in zip(mses, mses[1:]))


def test_noise_streams_independent():
    cfg_a = validate(LinkSpec(osnr_db=20.0), ReceiverSpec(sample_rate_hz=1e7), [])
    cfg_b = validate(LinkSpec(osnr_db=20.0, laser_linewidth_hz=0.0), ReceiverSpec(sample_rate_hz=1e7), [])
    a = simulate(cfg_a, 1e-3, seed=5, return_phase=True)[1]
    b = simulate(cfg_b, 1e-3, seed=5, return_phase=True)[1]
    assert a.std() > 0 and np.ptp(b) == 0.0


def test_too_short_capture():
    with pytest.raises(ValueError):
        simulate(validate(), 1e-9)
