"""PRS sequence generation, comb mapping and OFDM conversion."""

from __future__ import annotations

from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy import fft as sfft

from core.errors import ParameterError
from models.signal import IqSignal, Numerology, PrsConfig, ResourceGrid
from utils.profiles import COMB_STAGGER

GOLD_NC = 1600
_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def prs_c_init(
    n_id_seq: int,
    slot: int,
    symbol: int,
    symbols_per_slot: int = 14,
    slots_per_frame: int = 10,
) -> int:
    """Scrambling seed of one PRS symbol."""
    if not 0 <= n_id_seq <= 4095:
        raise ParameterError(f"n_id_seq {n_id_seq} outside [0, 4095]")
    if not 0 <= slot < slots_per_frame:
        raise ParameterError(f"slot {slot} outside [0, {slots_per_frame - 1}]")
    if not 0 <= symbol < symbols_per_slot:
        raise ParameterError(f"symbol {symbol} outside [0, {symbols_per_slot - 1}]")
    low = n_id_seq % 1024
    c_init = (
        (1 << 22) * (n_id_seq // 1024)
        + (1 << 10) * (symbols_per_slot * slot + symbol + 1) * (2 * low + 1)
        + low
    )
    return c_init % (1 << 31)


def gold_sequence(c_init: int, length: int) -> np.ndarray:
    """Length-31 Gold sequence c(0..length-1) with the 1600-sample advance."""
    if length < 1:
        raise ParameterError("Gold sequence length must be at least 1")
    if not 0 <= c_init < (1 << 31):
        raise ParameterError(f"c_init {c_init} outside [0, 2^31)")

    total = GOLD_NC + length
    x1 = np.zeros(total, dtype=np.uint8)
    x2 = np.zeros(total, dtype=np.uint8)
    x1[0] = 1
    x2[:31] = (c_init >> np.arange(31)) & 1

    # x(n+31) only depends on x(n..n+3), so 28 new taps can be filled per pass
    n = 0
    while n + 31 < total:
        stop = min(n + 28, total - 31)
        x1[n + 31 : stop + 31] = x1[n + 3 : stop + 3] ^ x1[n:stop]
        x2[n + 31 : stop + 31] = (
            x2[n + 3 : stop + 3] ^ x2[n + 2 : stop + 2] ^ x2[n + 1 : stop + 1] ^ x2[n:stop]
        )
        n = stop
    return x1[GOLD_NC:] ^ x2[GOLD_NC:]


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """Map bit pairs to unit-power QPSK symbols."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % 2:
        raise ParameterError("QPSK mapping needs an even number of bits")
    b = bits.reshape(-1, 2)
    return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) * _INV_SQRT2


def qpsk_demap(symbols: np.ndarray) -> np.ndarray:
    """Hard-decision inverse of qpsk_map."""
    symbols = np.asarray(symbols)
    bits = np.empty((symbols.size, 2), dtype=np.uint8)
    bits[:, 0] = symbols.real < 0
    bits[:, 1] = symbols.imag < 0
    return bits.reshape(-1)


def comb_residue(k_offset: int, k_comb: int, relative_symbol: int, stagger: bool) -> int:
    """Occupied subcarrier residue of one PRS symbol."""
    shift = COMB_STAGGER[k_comb][relative_symbol % k_comb] if stagger else 0
    return (k_offset + shift) % k_comb


def prs_symbol_subcarriers(cfg: PrsConfig, num: Numerology, relative_symbol: int) -> np.ndarray:
    residue = comb_residue(cfg.k_offset, cfg.k_comb, relative_symbol, cfg.stagger)
    return np.arange(residue, num.n_subcarriers, cfg.k_comb)


def prs_re_indices(cfg: PrsConfig, num: Numerology) -> Tuple[np.ndarray, np.ndarray]:
    """(subcarrier, symbol) index arrays of every PRS cell, symbol-major."""
    _check_fits(cfg, num)
    ks, ls = [], []
    for r in range(cfg.num_symbols):
        k = prs_symbol_subcarriers(cfg, num, r)
        ks.append(k)
        ls.append(np.full(k.size, cfg.start_symbol + r))
    return np.concatenate(ks), np.concatenate(ls)


@lru_cache(maxsize=4096)
def _symbol_bits(
    n_id_seq: int, slot: int, symbol: int, symbols_per_slot: int, slots_per_frame: int, n: int
) -> np.ndarray:
    bits = gold_sequence(prs_c_init(n_id_seq, slot, symbol, symbols_per_slot, slots_per_frame), n)
    bits.setflags(write=False)
    return bits


def prs_plain_bits(cfg: PrsConfig, num: Numerology, slot: int) -> np.ndarray:
    """Per-slot PRS bitstream, one fresh Gold sequence per PRS symbol."""
    _check_fits(cfg, num)
    per_symbol = 2 * (num.n_subcarriers // cfg.k_comb)
    return np.concatenate(
        [
            _symbol_bits(
                cfg.n_id_seq,
                slot,
                cfg.start_symbol + r,
                num.symbols_per_slot,
                num.slots_per_frame,
                per_symbol,
            )
            for r in range(cfg.num_symbols)
        ]
    )


def map_prs_symbols(
    cfg: PrsConfig, num: Numerology, symbols: np.ndarray, slot: int, frame: int
) -> ResourceGrid:
    """Write a per-slot PRS symbol sequence onto its comb cells."""
    ks, ls = prs_re_indices(cfg, num)
    if len(symbols) != ks.size:
        raise ParameterError(f"expected {ks.size} PRS symbols, got {len(symbols)}")
    grid = ResourceGrid.empty(num, slot, frame)
    grid.cells[ks, ls] = symbols
    return grid


def generate_prs_grid(cfg: PrsConfig, num: Numerology, slot: int, frame: int) -> ResourceGrid:
    """Standard (unencrypted) PRS grid of one slot."""
    if not cfg.is_active(slot):
        return ResourceGrid.empty(num, slot, frame)
    return map_prs_symbols(cfg, num, qpsk_map(prs_plain_bits(cfg, num, slot)), slot, frame)


def _check_fits(cfg: PrsConfig, num: Numerology) -> None:
    if cfg.start_symbol + cfg.num_symbols > num.symbols_per_slot:
        raise ParameterError("PRS symbols exceed the slot")
    if num.n_subcarriers % cfg.k_comb:
        raise ParameterError("comb size must divide the number of active subcarriers")


def _fft_bins(num: Numerology) -> np.ndarray:
    # subcarrier 0 is the lowest active tone; the band is centred on DC, no puncture
    k = np.arange(num.n_subcarriers)
    return (k - num.n_subcarriers // 2) % num.n_fft


def subcarrier_frequencies(num: Numerology) -> np.ndarray:
    """Signed baseband frequency index of every active subcarrier."""
    return np.arange(num.n_subcarriers) - num.n_subcarriers // 2


def ofdm_modulate(grid: ResourceGrid, num: Numerology) -> IqSignal:
    """OFDM-synthesise one slot.

    The unitary transform makes the energy of the CP-stripped samples equal
    to the grid energy.
    """
    if grid.cells.shape != (num.n_subcarriers, num.symbols_per_slot):
        raise ParameterError(
            f"grid shape {grid.cells.shape} does not match numerology "
            f"({num.n_subcarriers}, {num.symbols_per_slot})"
        )
    spectrum = np.zeros((num.n_fft, num.symbols_per_slot), dtype=complex)
    spectrum[_fft_bins(num)] = grid.cells
    body = sfft.ifft(spectrum, axis=0, norm="ortho")

    parts = []
    for l, cp in enumerate(num.cp_lengths):
        parts.append(body[num.n_fft - cp :, l])
        parts.append(body[:, l])
    t0 = (grid.frame_index * num.slots_per_frame + grid.slot_index) * num.slot_duration_s
    return IqSignal(np.concatenate(parts), num.sample_rate_hz, t0)


def ofdm_demodulate(
    sig: IqSignal,
    num: Numerology,
    start: int = 0,
    slot: int = 0,
    frame: int = 0,
    window_advance: int = 0,
) -> ResourceGrid:
    """Strip cyclic prefixes and transform one slot starting at sample ``start``.

    ``window_advance`` moves the FFT window that many samples into the cyclic
    prefix, which multiplies subcarrier f by exp(-j*2*pi*f*advance/n_fft).
    """
    if start < 0 or len(sig) < start + num.slot_samples:
        raise ParameterError(
            f"need {num.slot_samples} samples from index {start}, have {len(sig)}"
        )
    if not 0 <= window_advance <= min(num.cp_lengths):
        raise ParameterError("window advance must stay inside the cyclic prefix")

    starts = start + num.symbol_starts() + np.asarray(num.cp_lengths) - window_advance
    idx = starts[None, :] + np.arange(num.n_fft)[:, None]
    spectrum = sfft.fft(sig.samples[idx], axis=0, norm="ortho")
    return ResourceGrid(spectrum[_fft_bins(num)], slot, frame)


def cp_stripped(sig: IqSignal, num: Numerology, start: int = 0) -> np.ndarray:
    """Samples of one slot with every cyclic prefix removed."""
    starts = start + num.symbol_starts() + np.asarray(num.cp_lengths)
    return np.concatenate([sig.samples[s : s + num.n_fft] for s in starts])


def slot_waveform(grids: List[ResourceGrid], num: Numerology) -> IqSignal:
    """Concatenate consecutive slot grids into one waveform."""
    sigs = [ofdm_modulate(g, num) for g in grids]
    return IqSignal(np.concatenate([s.samples for s in sigs]), num.sample_rate_hz, sigs[0].t0_s)

