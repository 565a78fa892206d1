"""Authentication tags protected by LDPC and carried on spare PRS resource elements."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import constant_time, hashes, hmac
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from core.errors import CapacityError, ParameterError
from core.ldpc import LdpcCode, get_code
from core.prs_grid import comb_residue, qpsk_map
from models.signal import Numerology, PrsConfig, ResourceGrid
from models.verdict import DetectionVerdict, Technique

MESSAGE_MAGIC = b"PRSA"
HMAC_TAG_BITS = 128
SIGNATURE_BITS = 512


class AuthKind(str, Enum):
    HMAC = "hmac"
    DIGITAL_SIGNATURE = "ds"


@dataclass(frozen=True)
class AuthScheme:
    """Symmetric HMAC or Ed25519 signature scheme plus its channel code."""

    kind: AuthKind
    tag_bits: int
    hmac_key: Optional[bytes] = None
    signing_key: Optional[Ed25519PrivateKey] = None
    verify_key: Optional[Ed25519PublicKey] = None
    ldpc_seed: int = 0

    def __post_init__(self) -> None:
        if self.tag_bits <= 0 or self.tag_bits % 8:
            raise ParameterError("tag_bits must be a positive multiple of 8")
        if self.kind == AuthKind.DIGITAL_SIGNATURE and self.tag_bits != SIGNATURE_BITS:
            raise ParameterError(f"signatures are exactly {SIGNATURE_BITS} bits")
        if self.kind == AuthKind.HMAC and self.tag_bits > 256:
            raise ParameterError("HMAC-SHA-256 tags are at most 256 bits")

    @classmethod
    def hmac(cls, key: bytes, tag_bits: int = HMAC_TAG_BITS, ldpc_seed: int = 0) -> "AuthScheme":
        return cls(AuthKind.HMAC, tag_bits, hmac_key=key, ldpc_seed=ldpc_seed)

    @classmethod
    def digital_signature(cls, seed: bytes, ldpc_seed: int = 0) -> "AuthScheme":
        """Ed25519 key pair derived from a 32-byte seed."""
        private = Ed25519PrivateKey.from_private_bytes(seed)
        return cls(
            AuthKind.DIGITAL_SIGNATURE,
            SIGNATURE_BITS,
            signing_key=private,
            verify_key=private.public_key(),
            ldpc_seed=ldpc_seed,
        )

    @property
    def technique(self) -> Technique:
        return Technique.HMAC if self.kind == AuthKind.HMAC else Technique.DS

    @property
    def code(self) -> LdpcCode:
        return get_code(self.tag_bits, self.ldpc_seed)

    @property
    def coded_bits(self) -> int:
        return 2 * self.tag_bits


@dataclass(frozen=True)
class EmbeddingMap:
    re_indices: np.ndarray  # (cells, 2) of (subcarrier, symbol)
    k_offset_sig: int

    @property
    def subcarriers(self) -> np.ndarray:
        return self.re_indices[:, 0]

    @property
    def symbols(self) -> np.ndarray:
        return self.re_indices[:, 1]

    def __len__(self) -> int:
        return len(self.re_indices)


def build_auth_message(bs_id: int, frame: int, slot: int, n_id_seq: int) -> bytes:
    """Fixed-width big-endian message: magic | bs_id | frame | slot | n_id_seq."""
    if not 0 <= n_id_seq <= 4095:
        raise ParameterError(f"n_id_seq {n_id_seq} outside [0, 4095]")
    if not 0 <= slot <= 0xFFFF or not 0 <= bs_id <= 0xFFFFFFFF or not 0 <= frame <= 0xFFFFFFFF:
        raise ParameterError("identifier out of range")
    return struct.pack(">4sIIHH", MESSAGE_MAGIC, bs_id, frame, slot, n_id_seq)


def _bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def compute_tag(scheme: AuthScheme, msg: bytes) -> np.ndarray:
    if scheme.kind == AuthKind.HMAC:
        if scheme.hmac_key is None:
            raise ParameterError("HMAC scheme has no key")
        h = hmac.HMAC(scheme.hmac_key, hashes.SHA256())
        h.update(msg)
        return _bits(h.finalize()[: scheme.tag_bits // 8])
    if scheme.signing_key is None:
        raise ParameterError("signature scheme has no signing key")
    return _bits(scheme.signing_key.sign(msg))


def verify_tag(scheme: AuthScheme, msg: bytes, tag: np.ndarray) -> bool:
    tag_bytes = np.packbits(np.asarray(tag, dtype=np.uint8)).tobytes()
    if scheme.kind == AuthKind.HMAC:
        expected = np.packbits(compute_tag(scheme, msg)).tobytes()
        return constant_time.bytes_eq(expected, tag_bytes)
    if scheme.verify_key is None:
        raise ParameterError("signature scheme has no verification key")
    try:
        scheme.verify_key.verify(tag_bytes, msg)
    except InvalidSignature:
        return False
    return True


def encode_tag(scheme: AuthScheme, msg: bytes) -> np.ndarray:
    """Tag followed by rate-1/2 LDPC protection."""
    return scheme.code.encode(compute_tag(scheme, msg))


def schedule_offsets(n_bs: int, k_comb: int, tags_enabled: bool) -> List[Tuple[int, Optional[int]]]:
    """(PRS offset, tag offset) per scheduled BS; tags pair each PRS residue
    with the next one, halving the number of orthogonal BSs."""
    if tags_enabled:
        if 2 * n_bs > k_comb:
            raise CapacityError(
                f"comb {k_comb} with tags carries at most {k_comb // 2} BSs, got {n_bs}"
            )
        return [(2 * i, 2 * i + 1) for i in range(n_bs)]
    if n_bs > k_comb:
        raise CapacityError(f"comb {k_comb} carries at most {k_comb} BSs, got {n_bs}")
    step = 2 if 2 * n_bs <= k_comb else 1
    return [(step * i, None) for i in range(n_bs)]


def build_embedding_map(
    cfg: PrsConfig,
    num: Numerology,
    tag_offset: int,
    n_cells: int,
    lane: int = 0,
    n_lanes: int = 1,
) -> EmbeddingMap:
    """Spread ``n_cells`` tag cells evenly over the tag residue of the PRS symbols.

    The tag residue follows the same per-symbol staircase as the PRS comb, and
    ``lane`` selects one of ``n_lanes`` interleaved subsets.
    """
    if tag_offset == cfg.k_offset or not 0 <= tag_offset < cfg.k_comb:
        raise CapacityError(f"tag offset {tag_offset} collides with the PRS comb")
    if not 0 <= lane < n_lanes:
        raise ParameterError("lane index out of range")
    cells = []
    for r in range(cfg.num_symbols):
        residue = comb_residue(tag_offset, cfg.k_comb, r, cfg.stagger)
        for k in range(residue, num.n_subcarriers, cfg.k_comb):
            cells.append((k, cfg.start_symbol + r))
    candidates = np.array(cells, dtype=np.int64)[lane::n_lanes]
    if n_cells > len(candidates):
        raise CapacityError(f"{n_cells} tag cells requested, {len(candidates)} available")
    pick = np.floor(np.arange(n_cells) * len(candidates) / n_cells).astype(np.int64)
    return EmbeddingMap(re_indices=candidates[pick], k_offset_sig=tag_offset)


def embed_tag(grid: ResourceGrid, emap: EmbeddingMap, coded_bits: np.ndarray) -> ResourceGrid:
    coded_bits = np.asarray(coded_bits)
    if coded_bits.size != 2 * len(emap):
        raise CapacityError(f"{coded_bits.size} coded bits do not fill {len(emap)} cells")
    out = grid.copy()
    out.cells[emap.subcarriers, emap.symbols] = qpsk_map(coded_bits)
    return out


def extract_tag_symbols(grid: ResourceGrid, emap: EmbeddingMap) -> np.ndarray:
    return grid.cells[emap.subcarriers, emap.symbols]


def qpsk_llrs(symbols: np.ndarray, noise_var: float) -> np.ndarray:
    """Bit LLRs of unit-power QPSK in complex noise of variance ``noise_var``."""
    scale = 2.0 * np.sqrt(2.0) / max(noise_var, 1e-12)
    llr = np.empty(2 * symbols.size)
    llr[0::2] = scale * symbols.real
    llr[1::2] = scale * symbols.imag
    return llr


def extract_and_verify(
    grid: ResourceGrid,
    emap: EmbeddingMap,
    scheme: AuthScheme,
    expected_msg: bytes,
    noise_var: float,
) -> DetectionVerdict:
    """Decode the tag from an equalised grid and check it against the message."""
    llrs = qpsk_llrs(extract_tag_symbols(grid, emap), noise_var)
    tag, converged = scheme.code.decode(llrs)
    diagnostics = {"ldpc_converged": float(converged), "noise_var": float(noise_var)}
    if not converged:
        return DetectionVerdict(
            technique=scheme.technique, valid=False, reason="decode-failed", diagnostics=diagnostics
        )
    if not verify_tag(scheme, expected_msg, tag):
        return DetectionVerdict(
            technique=scheme.technique, valid=False, reason="tag-mismatch", diagnostics=diagnostics
        )
    return DetectionVerdict(technique=scheme.technique, valid=True, diagnostics=diagnostics)
