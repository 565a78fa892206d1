"""Rate-1/2 LDPC code construction and sum-product decoding."""

import numpy as np
import pytest

from core.errors import ParameterError
from core.ldpc import LdpcCode, get_code, ldpc_decode, ldpc_encode


@pytest.fixture(scope="module")
def code() -> LdpcCode:
    return get_code(128, 0)


def test_dimensions(code):
    assert code.n == 256
    assert code.rate == 0.5
    assert code.info_positions.size == 128
    column_weights = np.asarray(code.parity_check.sum(axis=0)).ravel()
    assert column_weights.max() <= 3


def test_codewords_satisfy_parity(code, rng):
    for _ in range(5):
        info = rng.integers(0, 2, code.k)
        assert not code.syndrome(ldpc_encode(code, info)).any()


def test_noiseless_decode(code, rng):
    info = rng.integers(0, 2, code.k).astype(np.uint8)
    llrs = 10.0 * (1 - 2 * ldpc_encode(code, info).astype(float))
    decoded, converged = ldpc_decode(code, llrs)
    assert converged
    assert np.array_equal(decoded, info)


def test_frame_error_rate_at_6db(code):
    rng = np.random.default_rng(2024)
    ebn0 = 10.0 ** (6.0 / 10.0)
    sigma2 = 1.0 / (2.0 * code.rate * ebn0)
    failures = 0
    trials = 300
    for _ in range(trials):
        info = rng.integers(0, 2, code.k).astype(np.uint8)
        x = 1.0 - 2.0 * ldpc_encode(code, info)
        y = x + np.sqrt(sigma2) * rng.standard_normal(code.n)
        decoded, converged = code.decode(2.0 * y / sigma2)
        failures += (not converged) or not np.array_equal(decoded, info)
    assert failures / trials <= 1e-2


def test_random_llrs_do_not_converge_to_a_given_word(code, rng):
    info = rng.integers(0, 2, code.k).astype(np.uint8)
    decoded, _ = code.decode(rng.standard_normal(code.n) * 0.1)
    assert not np.array_equal(decoded, info)


def test_shape_validation(code):
    with pytest.raises(ParameterError):
        code.encode(np.zeros(code.k + 1))
    with pytest.raises(ParameterError):
        code.decode(np.zeros(code.n - 1))
    with pytest.raises(ParameterError):
        LdpcCode(k=0)


def test_codes_are_cached_and_seeded():
    assert get_code(64, 1) is get_code(64, 1)
    a, b = LdpcCode(64, seed=1), LdpcCode(64, seed=2)
    assert (a.parity_check != b.parity_check).nnz > 0
