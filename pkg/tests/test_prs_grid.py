"""PRS sequence generation, comb mapping and OFDM conversion."""

import numpy as np
import pytest

from core.errors import ParameterError
from core.prs_grid import (
    cp_stripped,
    generate_prs_grid,
    gold_sequence,
    ofdm_demodulate,
    ofdm_modulate,
    prs_c_init,
    prs_plain_bits,
    prs_re_indices,
    qpsk_demap,
    qpsk_map,
    subcarrier_frequencies,
)
from models.signal import IqSignal, Numerology, PrsConfig


def test_c_init_values():
    assert prs_c_init(0, 0, 0) == 1024
    # n_id_seq >= 1024 switches on the 2^22 term
    assert prs_c_init(1024, 0, 0) == (1 << 22) + 1024
    assert prs_c_init(1, 2, 3) == 1024 * (14 * 2 + 3 + 1) * 3 + 1


@pytest.mark.parametrize(
    "args", [(4096, 0, 0), (0, -1, 0), (0, 0, 14), (0, 10, 0), (0, 20, 0, 14, 20)]
)
def test_c_init_rejects_out_of_range(args):
    with pytest.raises(ParameterError):
        prs_c_init(*args)


def test_c_init_slot_bound_follows_numerology():
    assert prs_c_init(1, 19, 3, 14, 20) == 1024 * (14 * 19 + 3 + 1) * 3 + 1


def test_gold_sequence_balance():
    bits = gold_sequence(prs_c_init(321, 4, 7), 100_000)
    assert bits.dtype == np.uint8
    assert set(np.unique(bits)) <= {0, 1}
    assert abs(bits.mean() - 0.5) <= 0.01


def test_gold_sequence_is_deterministic():
    assert np.array_equal(gold_sequence(99, 500), gold_sequence(99, 500))
    assert not np.array_equal(gold_sequence(99, 500), gold_sequence(100, 500))


def test_gold_sequence_rejects_empty():
    with pytest.raises(ParameterError):
        gold_sequence(1, 0)


def test_symbols_use_distinct_sequences():
    seeds = [prs_c_init(5, 0, sym) for sym in range(14)]
    assert len(set(seeds)) == 14
    first = gold_sequence(seeds[0], 64)
    second = gold_sequence(seeds[1], 64)
    assert not np.array_equal(first, second)


def test_qpsk_unit_power_and_demap():
    bits = np.array([0, 0, 0, 1, 1, 0, 1, 1])
    symbols = qpsk_map(bits)
    assert np.allclose(np.abs(symbols), 1.0)
    assert np.array_equal(qpsk_demap(symbols), bits)


def test_qpsk_rejects_odd_length():
    with pytest.raises(ParameterError):
        qpsk_map(np.array([0, 1, 0]))


def test_comb_occupancy(prs_cfg, num):
    grid = generate_prs_grid(prs_cfg, num, slot=0, frame=0)
    occupied = np.abs(grid.cells) > 0
    per_symbol = occupied.sum(axis=0)
    assert np.all(per_symbol[: prs_cfg.num_symbols] == num.n_subcarriers // prs_cfg.k_comb)
    assert np.all(per_symbol[prs_cfg.num_symbols :] == 0)
    # the staggered comb visits every subcarrier within k_comb symbols
    assert occupied[:, : prs_cfg.k_comb].any(axis=1).all()


def test_unstaggered_comb_stays_on_offset(num):
    cfg = PrsConfig(n_id_seq=3, k_comb=6, k_offset=2, stagger=False)
    ks, _ = prs_re_indices(cfg, num)
    assert np.all(ks % 6 == 2)


def test_inactive_slot_is_empty(num):
    cfg = PrsConfig(n_id_seq=3, slots_active=frozenset({1}))
    assert generate_prs_grid(cfg, num, slot=0, frame=0).energy() == 0.0
    assert generate_prs_grid(cfg, num, slot=1, frame=0).energy() > 0.0


def test_plain_bits_length(prs_cfg, num):
    bits = prs_plain_bits(prs_cfg, num, slot=0)
    assert bits.size == 2 * prs_re_indices(prs_cfg, num)[0].size


def test_ofdm_round_trip(prs_cfg, num):
    grid = generate_prs_grid(prs_cfg, num, slot=1, frame=2)
    sig = ofdm_modulate(grid, num)
    assert len(sig) == num.slot_samples
    back = ofdm_demodulate(sig, num, slot=1, frame=2)
    assert np.allclose(back.cells, grid.cells, atol=1e-9)


def test_ofdm_preserves_energy(prs_cfg, num):
    grid = generate_prs_grid(prs_cfg, num, slot=0, frame=0)
    sig = ofdm_modulate(grid, num)
    stripped = cp_stripped(sig, num)
    assert np.sum(np.abs(stripped) ** 2) == pytest.approx(grid.energy(), rel=1e-9)


def test_delay_inside_cp_is_a_phase_ramp(prs_cfg, num):
    delay = 5
    grid = generate_prs_grid(prs_cfg, num, slot=0, frame=0)
    sig = ofdm_modulate(grid, num)
    delayed = IqSignal(np.concatenate((np.zeros(delay), sig.samples)), num.sample_rate_hz)
    back = ofdm_demodulate(delayed, num)
    ramp = np.exp(-2j * np.pi * subcarrier_frequencies(num) * delay / num.n_fft)
    assert np.allclose(back.cells, grid.cells * ramp[:, None], atol=1e-9)


def test_demodulate_rejects_short_buffer(num):
    with pytest.raises(ParameterError):
        ofdm_demodulate(IqSignal(np.zeros(100), num.sample_rate_hz), num)


def test_numerology_profiles():
    test = Numerology.from_profile("test")
    full = Numerology.from_profile("full")
    assert test.sample_rate_hz == pytest.approx(30.72e6)
    assert full.sample_rate_hz == pytest.approx(122.88e6)
    assert test.slot_duration_s == pytest.approx(1e-3)
    assert full.slot_samples == 4 * test.slot_samples
    with pytest.raises(ParameterError):
        Numerology.from_profile("nope")
