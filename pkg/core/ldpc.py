"""Rate-1/2 regular LDPC code with sum-product decoding."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy import sparse

from core.errors import ParameterError

logger = logging.getLogger(__name__)

COLUMN_WEIGHT = 3
ROW_WEIGHT = 6
MAX_ITERATIONS = 25
LLR_CLIP = 30.0
_REPAIR_PASSES = 200


def _regular_rows(n: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Column-weight-3, row-weight-6 rows from a seeded socket permutation.

    Rows holding a repeated column or sharing two columns with another row
    (a length-4 cycle) swap one socket with a random row until none remain.
    """
    m = n * COLUMN_WEIGHT // ROW_WEIGHT
    rows = rng.permutation(np.repeat(np.arange(n), COLUMN_WEIGHT)).reshape(m, ROW_WEIGHT)
    for _ in range(_REPAIR_PASSES):
        col_rows: List[List[int]] = [[] for _ in range(n)]
        for r in range(m):
            for c in rows[r]:
                col_rows[c].append(r)
        changed = False
        for i in range(m):
            counts = Counter(r for c in set(rows[i]) for r in col_rows[c] if r != i)
            repeated = len(set(rows[i])) < ROW_WEIGHT
            if repeated or (counts and max(counts.values()) >= 2):
                j = int(rng.integers(m - 1))
                j += j >= i
                a, b = rng.integers(ROW_WEIGHT, size=2)
                rows[i, a], rows[j, b] = rows[j, b], rows[i, a]
                changed = True
        if not changed:
            break
    else:
        logger.warning("n=%d code still has short cycles after repair", n)
    return [np.unique(r) for r in rows]


def _systematic_form(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduce H over GF(2); returns (reduced rows, pivot columns, free columns)."""
    a = h.copy()
    m, n = a.shape
    pivots = []
    row = 0
    for col in range(n):
        if row == m:
            break
        hits = np.nonzero(a[row:, col])[0]
        if hits.size == 0:
            continue
        p = row + hits[0]
        if p != row:
            a[[row, p]] = a[[p, row]]
        others = np.nonzero(a[:, col])[0]
        others = others[others != row]
        a[others] ^= a[row]
        pivots.append(col)
        row += 1
    pivots_arr = np.array(pivots, dtype=np.int64)
    free = np.setdiff1d(np.arange(n), pivots_arr)
    return a[: len(pivots)], pivots_arr, free


@dataclass
class LdpcCode:
    """(3,6)-regular code of length 2k with dimension exactly ``k``.

    When the parity-check matrix is rank deficient the spare free positions
    are fixed to zero and known to the decoder.
    """

    k: int
    seed: int = 0
    max_iterations: int = MAX_ITERATIONS
    parity_check: sparse.csr_matrix = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = 2 * self.k
        if self.k < 1:
            raise ParameterError("code dimension must be positive")
        rng = np.random.default_rng(self.seed)
        rows = _regular_rows(n, rng)
        h = np.zeros((len(rows), n), dtype=np.uint8)
        for r, cols in enumerate(rows):
            h[r, cols] = 1
        self.parity_check = sparse.csr_matrix(h)

        reduced, self._pivots, free = _systematic_form(h)
        self._info_positions = free[: self.k]
        self._shortened = free[self.k :]
        self._parity_map = reduced[:, self._info_positions]

        coo = self.parity_check.tocoo()
        order = np.lexsort((coo.col, coo.row))
        self._edge_check = coo.row[order]
        self._edge_var = coo.col[order]
        self._check_starts = np.searchsorted(self._edge_check, np.arange(h.shape[0]))

    @property
    def n(self) -> int:
        return 2 * self.k

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def info_positions(self) -> np.ndarray:
        return self._info_positions

    def syndrome(self, codeword: np.ndarray) -> np.ndarray:
        return (self.parity_check @ np.asarray(codeword, dtype=np.int64)) % 2

    def encode(self, info: np.ndarray) -> np.ndarray:
        info = np.asarray(info, dtype=np.uint8).reshape(-1)
        if info.size != self.k:
            raise ParameterError(f"info length {info.size} != code dimension {self.k}")
        c = np.zeros(self.n, dtype=np.uint8)
        c[self._info_positions] = info
        c[self._pivots] = (self._parity_map.astype(np.int64) @ info) % 2
        return c

    def decode(self, llrs: np.ndarray) -> Tuple[np.ndarray, bool]:
        """Log-domain sum-product decoding. Positive LLR favours bit 0."""
        llrs = np.asarray(llrs, dtype=float).reshape(-1)
        if llrs.size != self.n:
            raise ParameterError(f"expected {self.n} LLRs, got {llrs.size}")
        channel = np.clip(llrs, -LLR_CLIP, LLR_CLIP)
        channel[self._shortened] = LLR_CLIP

        ev, starts = self._edge_var, self._check_starts
        to_check = channel[ev]
        posterior = channel
        hard = np.zeros(self.n, dtype=np.uint8)
        for _ in range(self.max_iterations):
            t = np.tanh(0.5 * to_check)
            mag = np.log(np.maximum(np.abs(t), 1e-300))
            neg = (t < 0).astype(np.int64)
            row_mag = np.add.reduceat(mag, starts)[self._edge_check]
            row_neg = np.add.reduceat(neg, starts)[self._edge_check]
            prod = np.exp(row_mag - mag) * np.where((row_neg - neg) % 2, -1.0, 1.0)
            to_var = 2.0 * np.arctanh(np.clip(prod, -1 + 1e-15, 1 - 1e-15))

            posterior = channel + np.bincount(ev, weights=to_var, minlength=self.n)
            hard = (posterior < 0).astype(np.uint8)
            if np.all(posterior != 0) and not self.syndrome(hard).any():
                return hard[self._info_positions], True
            to_check = np.clip(posterior[ev] - to_var, -LLR_CLIP, LLR_CLIP)
        return hard[self._info_positions], False


@lru_cache(maxsize=8)
def get_code(k: int, seed: int = 0) -> LdpcCode:
    """Shared immutable code instance per (dimension, seed)."""
    return LdpcCode(k=k, seed=seed)


def ldpc_encode(code: LdpcCode, info: np.ndarray) -> np.ndarray:
    return code.encode(info)


def ldpc_decode(code: LdpcCode, llrs: np.ndarray) -> Tuple[np.ndarray, bool]:
    return code.decode(llrs)
