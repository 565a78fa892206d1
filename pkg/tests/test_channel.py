"""Path loss, link application, power control and AWGN."""

from dataclasses import replace

import numpy as np
import pytest

from core.channel import (
    LinkState,
    apply_link,
    doppler_hz,
    make_link,
    noise_power_dbm,
    power_control,
    superpose_with_noise,
    uma_pathloss_db,
)
from core.errors import ParameterError
from core.prs_grid import generate_prs_grid, ofdm_modulate
from core.receiver import PositioningReceiver, compute_rstd
from models.scenario import ChannelConfig
from models.signal import IqSignal
from utils.profiles import SPEED_OF_LIGHT

FS = 30.72e6


def test_pathloss_reference_value():
    assert uma_pathloss_db(500.0, 3.5) == pytest.approx(98.26, abs=0.01)


def test_pathloss_is_clamped_below_min_distance():
    assert uma_pathloss_db(1.0, 3.5) == uma_pathloss_db(10.0, 3.5)
    assert uma_pathloss_db(10.0, 3.5) >= 0.0


def test_pathloss_monotone_in_distance():
    values = [uma_pathloss_db(d, 3.5) for d in (20.0, 100.0, 800.0, 3000.0)]
    assert values == sorted(values)


def test_doppler_sign():
    # moving toward the BS raises the received frequency
    toward = doppler_hz((10.0, 0.0), 0.0, 3.5e9)
    assert toward == pytest.approx(10.0 / SPEED_OF_LIGHT * 3.5e9)
    assert doppler_hz((10.0, 0.0), np.pi, 3.5e9) == pytest.approx(-toward)
    assert doppler_hz((0.0, 10.0), 0.0, 3.5e9) == pytest.approx(0.0, abs=1e-9)


def test_make_link_geometry():
    cfg = ChannelConfig()
    link = make_link((400.0, 300.0), (0.0, 0.0), cfg, tx_height_m=1.5, rx_height_m=1.5)
    assert link.distance_3d_m == pytest.approx(500.0)
    assert link.delay_s == pytest.approx(500.0 / SPEED_OF_LIGHT)
    assert link.rx_power_dbm == pytest.approx(-link.pathloss_db)


def test_power_control_equalises_and_caps():
    cfg = ChannelConfig()
    links = [
        make_link((d, 0.0), (0.0, 0.0), cfg, 25.0, 1.5) for d in (100.0, 400.0, 5000.0)
    ]
    controlled = power_control(links, target_dbm=-80.0, cap_dbm=24.0)
    assert controlled[0].rx_power_dbm == pytest.approx(-80.0)
    assert controlled[1].rx_power_dbm == pytest.approx(-80.0)
    assert controlled[2].tx_power_dbm == 24.0
    assert controlled[2].rx_power_dbm < -80.0
    with pytest.raises(ParameterError):
        power_control([], -80.0, 24.0)


def test_power_control_without_target_uses_weakest_link():
    cfg = ChannelConfig()
    links = [make_link((d, 0.0), (0.0, 0.0), cfg, 25.0, 1.5) for d in (100.0, 400.0)]
    controlled = power_control(links, target_dbm=None, cap_dbm=24.0)
    assert controlled[1].tx_power_dbm == pytest.approx(24.0)
    assert controlled[0].rx_power_dbm == pytest.approx(controlled[1].rx_power_dbm)


def test_apply_link_delay_and_gain():
    cfg = ChannelConfig()
    sig = IqSignal(np.ones(64), FS)
    link = make_link((300.0, 0.0), (0.0, 0.0), cfg, 1.5, 1.5, tx_power_dbm=0.0)
    out = apply_link(sig, link)
    k = int(round(link.delay_s * FS))
    assert k == 31
    assert len(out) == 64 + k
    assert np.all(out.samples[:k] == 0)
    assert 10 * np.log10(out.samples[k:].real.mean() ** 2) == pytest.approx(-link.pathloss_db)


def test_delay_quantisation_bound():
    cfg = ChannelConfig()
    for d in (123.4, 777.7, 1500.1):
        link = make_link((d, 0.0), (0.0, 0.0), cfg, 1.5, 1.5)
        k = round(link.delay_s * FS)
        assert abs(k / FS - link.delay_s) <= 0.5 / FS
        assert abs(k / FS - link.delay_s) * SPEED_OF_LIGHT <= 4.88


def test_pure_noise_power():
    cfg = ChannelConfig()
    bandwidth = 10e6
    out = superpose_with_noise([], -174.0 + cfg.noise_figure_db, bandwidth, 3, 1_000_000, FS)
    expected_mw = 10.0 ** (noise_power_dbm(cfg, bandwidth) / 10.0)
    assert out.power() == pytest.approx(expected_mw, rel=0.05)


def test_uncorrelated_signals_add_in_power(rng):
    n = 200_000
    a = IqSignal(np.exp(2j * np.pi * rng.random(n)), FS)
    b = IqSignal(np.exp(2j * np.pi * rng.random(n)), FS)
    out = superpose_with_noise([a, b], -np.inf, FS, 0)
    assert out.power() == pytest.approx(2.0, abs=0.05)


def test_superpose_pads_and_truncates():
    a = IqSignal(np.ones(10), FS, t0_s=0.5)
    b = IqSignal(np.ones(30), FS)
    out = superpose_with_noise([a, b], -np.inf, FS, 0, n_samples=20)
    assert len(out) == 20
    assert out.t0_s == 0.5
    assert np.allclose(out.samples[:10], 2.0)
    assert np.allclose(out.samples[10:], 1.0)


def test_superpose_rejects_mixed_rates():
    with pytest.raises(ParameterError):
        superpose_with_noise([IqSignal(np.ones(4), FS), IqSignal(np.ones(4), 2 * FS)], -np.inf, FS, 0)
    with pytest.raises(ParameterError):
        superpose_with_noise([], -174.0, FS, 0)


def test_noise_is_seeded():
    a = superpose_with_noise([], -100.0, FS, 11, 1000, FS)
    b = superpose_with_noise([], -100.0, FS, 11, 1000, FS)
    c = superpose_with_noise([], -100.0, FS, 12, 1000, FS)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def _received_rstds(num, replicas, links):
    receiver = PositioningReceiver(num)
    buffer = np.zeros(receiver.buffer_samples(1), dtype=complex)
    for bs_id, link in links.items():
        out = apply_link(replicas[bs_id][0], link).samples
        buffer[: out.size] += out
    toas = receiver.measure_all(IqSignal(buffer, FS), replicas)
    return compute_rstd(toas, reference_bs=0, fs=FS)


def test_common_delay_leaves_rstds_unchanged(prs_cfg, num):
    replicas = {
        bs_id: [
            ofdm_modulate(
                generate_prs_grid(
                    prs_cfg.model_copy(update={"n_id_seq": 17 + bs_id, "k_offset": bs_id}),
                    num,
                    0,
                    0,
                ),
                num,
            )
        ]
        for bs_id in range(3)
    }
    links = {
        bs_id: LinkState(
            distance_3d_m=k / FS * SPEED_OF_LIGHT,
            pathloss_db=0.0,
            delay_s=k / FS,
            doppler_hz=0.0,
            tx_power_dbm=0.0,
        )
        for bs_id, k in enumerate((40, 75, 110))
    }
    direct = _received_rstds(num, replicas, links)
    relayed = _received_rstds(
        num,
        replicas,
        {b: replace(link, delay_s=link.delay_s + 300 / FS) for b, link in links.items()},
    )
    assert direct.reference_bs == relayed.reference_bs == 0
    assert direct.values_s == pytest.approx({0: 0.0, 1: 35 / FS, 2: 70 / FS})
    assert relayed.values_s == pytest.approx(direct.values_s)
