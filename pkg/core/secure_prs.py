"""AES-CTR encrypted PRS sequences and their correlation statistics."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from core.errors import ParameterError
from core.prs_grid import qpsk_demap, qpsk_map

BLOCK_BITS = 128
COUNTER_SPACE = 1 << 32


@dataclass(frozen=True)
class KeyMaterial:
    """AES-128 key with a 96-bit nonce and the first 32-bit block counter."""

    key: bytes
    nonce: bytes
    counter_base: int = 0

    def __post_init__(self) -> None:
        if len(self.key) != 16:
            raise ParameterError("AES-128 key must be 16 bytes")
        if len(self.nonce) != 12:
            raise ParameterError("nonce must be 12 bytes")
        if not 0 <= self.counter_base < COUNTER_SPACE:
            raise ParameterError("counter_base must fit in 32 bits")

    @classmethod
    def for_slot(cls, key: bytes, bs_id: int, frame: int, slot: int) -> "KeyMaterial":
        """Bind the keystream to a transmission: bs_id | frame | slot | 0."""
        nonce = struct.pack(">IIHH", bs_id & 0xFFFFFFFF, frame & 0xFFFFFFFF, slot & 0xFFFF, 0)
        return cls(key=key, nonce=nonce)


@dataclass
class EncryptedPrsSequence:
    symbols: np.ndarray
    source_bits: np.ndarray
    cipher_bits: np.ndarray
    bs_id: int = 0


class KeyGenerator:
    """Seeded source of fresh key material for Monte-Carlo trials."""

    def __init__(self, seed: int):
        self._rng = np.random.default_rng(seed)

    def next(self) -> KeyMaterial:
        return KeyMaterial(key=self._rng.bytes(16), nonce=self._rng.bytes(12))


def keystream(km: KeyMaterial, nbits: int) -> np.ndarray:
    """First ``nbits`` of the AES-CTR keystream as a 0/1 array."""
    if nbits < 1:
        raise ParameterError("keystream length must be at least 1 bit")
    n_blocks = -(-nbits // BLOCK_BITS)
    if km.counter_base + n_blocks > COUNTER_SPACE:
        raise ParameterError(
            f"{n_blocks} blocks from counter {km.counter_base} exhaust the 32-bit counter"
        )
    initial_block = km.nonce + km.counter_base.to_bytes(4, "big")
    encryptor = Cipher(algorithms.AES(km.key), modes.CTR(initial_block)).encryptor()
    stream = encryptor.update(bytes(16 * n_blocks)) + encryptor.finalize()
    return np.unpackbits(np.frombuffer(stream, dtype=np.uint8))[:nbits]


def encrypt_prs(
    bits: np.ndarray,
    km: KeyMaterial,
    bs_id: int = 0,
    keystream_bits: Optional[np.ndarray] = None,
) -> EncryptedPrsSequence:
    """XOR the PRS bitstream with the keystream and QPSK-map the result.

    ``keystream_bits`` overrides the cipher output.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 2:
        raise ParameterError("PRS bitstream must have an even length")
    pad = keystream(km, bits.size) if keystream_bits is None else np.asarray(keystream_bits, dtype=np.uint8)
    if pad.size != bits.size:
        raise ParameterError("keystream length does not match the bitstream")
    cipher_bits = bits ^ pad
    return EncryptedPrsSequence(
        symbols=qpsk_map(cipher_bits),
        source_bits=bits,
        cipher_bits=cipher_bits,
        bs_id=bs_id,
    )


def correlate(a: np.ndarray, b: np.ndarray) -> complex:
    """Inner product a^H b."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ParameterError(f"length mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def crosscorr_samples(plain: np.ndarray, trials: int, km_source: KeyGenerator) -> np.ndarray:
    """Correlation of a fixed plain sequence against freshly keyed encryptions."""
    bits = qpsk_demap(plain)
    return np.array(
        [correlate(plain, encrypt_prs(bits, km_source.next()).symbols) for _ in range(trials)]
    )


def crosscorr_variance_estimate(plain: np.ndarray, trials: int, km_source: KeyGenerator) -> float:
    """Monte-Carlo Var(R) between a plain sequence and its encryptions."""
    if trials < 100:
        raise ParameterError("at least 100 trials are required")
    r = crosscorr_samples(plain, trials, km_source)
    return float(np.mean(np.abs(r - r.mean()) ** 2))
