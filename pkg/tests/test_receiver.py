"""Correlation receiver, Doppler search, RSTD and hearability calibration."""

import numpy as np
import pytest

from core.errors import MeasurementUnavailable, ParameterError
from core.prs_grid import (
    generate_prs_grid,
    ofdm_modulate,
    prs_plain_bits,
    prs_re_indices,
    qpsk_map,
    slot_waveform,
)
from core.receiver import (
    PositioningReceiver,
    ToaMeasurement,
    calibrate_hearability,
    coarse_doppler_estimate,
    compute_rstd,
    cross_correlate,
    equalize_slot,
    parabolic_vertex,
    residual_cfo_correct,
    toa_estimate,
)
from models.scenario import ReceiverSettings
from models.signal import IqSignal

FS = 30.72e6
GRID = np.arange(-1000.0, 1001.0, 100.0)


def _rotate(samples: np.ndarray, freq_hz: float) -> np.ndarray:
    return samples * np.exp(2j * np.pi * freq_hz * np.arange(len(samples)) / FS)


def _received(replica: IqSignal, delay: int, tail: int = 200) -> IqSignal:
    return IqSignal(
        np.concatenate((np.zeros(delay), replica.samples, np.zeros(tail))), replica.sample_rate_hz
    )


@pytest.fixture
def replica(prs_cfg, num) -> IqSignal:
    return ofdm_modulate(generate_prs_grid(prs_cfg, num, 0, 0), num)


def test_cross_correlate_peak():
    x = np.zeros(64, dtype=complex)
    x[10:14] = [1, 2, 3, 4]
    c = cross_correlate(x, np.array([1, 2, 3, 4], dtype=complex))
    assert int(np.argmax(np.abs(c))) == 10
    with pytest.raises(ParameterError):
        cross_correlate(np.ones(3), np.ones(4))


def test_toa_on_clean_signal(replica):
    toa = toa_estimate(_received(replica, 37), replica, bs_id=4)
    assert toa.sample_index == 37
    assert toa.detected
    assert toa.bs_id == 4


def test_noise_only_is_not_detected(replica, rng):
    noise = IqSignal(rng.standard_normal(len(replica) + 1025) + 0j, FS)
    toa = toa_estimate(noise, replica, max_lag=1025)
    assert not toa.detected


def test_peak_to_floor_falls_with_noise(replica):
    sig = _received(replica, 20, tail=1000)
    ratios = []
    for i, noise_power in enumerate((1e-2, 1.0, 10.0)):
        rng = np.random.default_rng(i)
        noise = np.sqrt(noise_power / 2) * (
            rng.standard_normal(len(sig)) + 1j * rng.standard_normal(len(sig))
        )
        ratios.append(toa_estimate(sig.with_samples(sig.samples + noise), replica).peak_to_floor_db)
    assert ratios == sorted(ratios, reverse=True)


def test_parabolic_vertex():
    assert parabolic_vertex([0.0, 1.0, 2.0], [0.0, 1.0, 0.0]) == pytest.approx(1.0)
    assert parabolic_vertex([0.0, 1.0, 2.0], [1.0, 1.0, 1.0]) == 1.0
    # peak of -(f - 1.3)^2
    metrics = [-((f - 1.3) ** 2) for f in (0.0, 1.0, 2.0)]
    assert parabolic_vertex([0.0, 1.0, 2.0], metrics) == pytest.approx(1.3)


def test_doppler_estimate_recovers_offset(replica):
    sig = _received(replica, 30)
    shifted = sig.with_samples(_rotate(sig.samples, 350.0))
    est = coarse_doppler_estimate(shifted, replica, GRID)
    assert est.freq_hz == pytest.approx(350.0, abs=20.0)
    assert not est.at_edge


def test_doppler_estimate_without_offset(replica):
    est = coarse_doppler_estimate(_received(replica, 30), replica, GRID)
    assert abs(est.freq_hz) <= 50.0


def test_doppler_grid_edge_is_flagged(replica):
    sig = _received(replica, 30)
    shifted = sig.with_samples(_rotate(sig.samples, 1500.0))
    assert coarse_doppler_estimate(shifted, replica, GRID).at_edge
    with pytest.raises(ParameterError):
        coarse_doppler_estimate(sig, replica, [0.0, 100.0])


def test_residual_cfo_over_slots():
    slot = 1e-3
    peaks = [np.exp(2j * np.pi * 50.0 * s * slot) * (2 + 1j) for s in range(10)]
    assert residual_cfo_correct(peaks, slot).freq_hz == pytest.approx(50.0, abs=5.0)
    single = residual_cfo_correct(peaks[:1], slot)
    assert single.single_slot
    assert single.freq_hz == 0.0


def _toa(bs_id, index, detected=True, ratio=20.0):
    return ToaMeasurement(bs_id, index, 1.0 + 0j, ratio, detected)


def test_rstd_against_reference():
    rstd = compute_rstd([_toa(1, 100), _toa(2, 130), _toa(3, 90)], reference_bs=1, fs=FS)
    assert rstd.reference_bs == 1
    assert rstd.values_s[1] == 0.0
    assert rstd.values_s[2] == pytest.approx(30 / FS)
    assert rstd.values_s[3] == pytest.approx(-10 / FS)


def test_rstd_falls_back_to_strongest():
    toas = [_toa(1, 100, detected=False), _toa(2, 130, ratio=15.0), _toa(3, 90, ratio=25.0)]
    rstd = compute_rstd(toas, reference_bs=1, fs=FS)
    assert rstd.reference_bs == 3
    assert set(rstd.values_s) == {2, 3}


def test_rstd_needs_two_detections():
    with pytest.raises(MeasurementUnavailable):
        compute_rstd([_toa(1, 100), _toa(2, 130, detected=False)], reference_bs=1, fs=FS)


def test_receiver_measures_delay_doppler_and_cfo(prs_cfg, num):
    receiver = PositioningReceiver(num, ReceiverSettings())
    assert receiver.max_lag == 1025
    slots = [ofdm_modulate(generate_prs_grid(prs_cfg, num, s, 0), num) for s in range(2)]
    waveform = slot_waveform([generate_prs_grid(prs_cfg, num, s, 0) for s in range(2)], num)
    delay = 211
    sig = IqSignal(np.zeros(receiver.buffer_samples(2), dtype=complex), FS)
    sig.samples[delay : delay + len(waveform)] = _rotate(waveform.samples, 240.0)
    toa = receiver.measure(sig, bs_id=9, replica_slots=slots)
    assert toa.detected
    assert abs(toa.sample_index - delay) <= 1
    assert toa.frequency_hz == pytest.approx(240.0, abs=20.0)


def test_equalize_slot_recovers_grid(prs_cfg, num):
    grid = generate_prs_grid(prs_cfg, num, 0, 0)
    sig = ofdm_modulate(grid, num)
    delay = 50
    rx = IqSignal(
        np.concatenate((np.zeros(delay), 0.01 * np.exp(1j * 0.7) * sig.samples, np.zeros(10))),
        FS,
    )
    cells = prs_re_indices(prs_cfg, num)
    pilots = qpsk_map(prs_plain_bits(prs_cfg, num, 0))
    eq, noise_var = equalize_slot(rx, num, delay, 0.0, cells, pilots)
    assert np.allclose(eq.cells, grid.cells, atol=1e-9)
    assert noise_var < 1e-12
    with pytest.raises(ParameterError):
        equalize_slot(rx, num, len(rx), 0.0, cells, pilots)


def test_calibrated_threshold_meets_false_rate(replica, num):
    receiver = PositioningReceiver(num)
    n = receiver.buffer_samples(1)
    cal = calibrate_hearability(replica, n, trials=200, max_lag=receiver.max_lag, seed=3)
    again = calibrate_hearability(
        replica, n, trials=200, max_lag=receiver.max_lag, configured_kappa_db=cal.kappa_db, seed=3
    )
    assert again.false_rate_at_configured <= 0.01 + 1.0 / 200
    assert cal.trials == 200


def test_default_threshold_rejects_noise(replica, num):
    receiver = PositioningReceiver(num)
    cal = calibrate_hearability(
        replica, receiver.buffer_samples(1), trials=300, max_lag=receiver.max_lag, seed=8
    )
    assert cal.false_rate_at_configured <= 0.01
    assert cal.kappa_db < 11.5


def test_calibration_validation(replica):
    with pytest.raises(ParameterError):
        calibrate_hearability(replica, 40000, false_rate=0.0)
