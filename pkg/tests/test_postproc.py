import math

import numpy as np
import pytest

from photonkd.core import random_stream
from photonkd.errors import DataError, InvalidArgumentError
from photonkd.postproc import as_bits, final_key_length, privacy_amplify, reconcile, toeplitz_seed
from photonkd.utils.keyio import decode_key, encode_key, read_key, write_key


def noisy_pair(n, error_rate, seed):
    rng = np.random.default_rng(seed)
    alice = rng.integers(0, 2, n, dtype=np.uint8)
    flips = rng.random(n) < error_rate
    return alice, alice ^ flips.astype(np.uint8)


def test_identical_keys_only_leak_block_parities():
    alice, _ = noisy_pair(100, 0.0, 1)
    report = reconcile(alice, alice, block_size=8, passes=3)
    assert np.array_equal(report.corrected, alice)
    assert report.parity_bits_leaked == math.ceil(100 / 8) * 3
    assert report.corrections_per_pass == [0, 0, 0]
    assert report.residual_error_estimate == 0.0


def test_single_error_is_found_by_bisection():
    alice = np.zeros(64, dtype=np.uint8)
    bob = alice.copy()
    bob[37] = 1
    one_pass = reconcile(alice, bob, block_size=8, passes=1)
    assert np.array_equal(one_pass.corrected, alice)
    # 8 block parities plus 3 halvings of the offending block
    assert one_pass.parity_bits_leaked == 11
    assert reconcile(alice, bob, block_size=8, passes=4).parity_bits_leaked == 8 * 4 + 3


def test_reconcile_never_touches_alice():
    alice, bob = noisy_pair(500, 0.05, 2)
    before = alice.copy()
    reconcile(alice, bob)
    assert np.array_equal(alice, before)


def test_five_percent_errors_are_removed():
    alice, bob = noisy_pair(10_000, 0.05, 3)
    report = reconcile(alice, bob, block_size=8, passes=4, rng=random_stream(3))
    assert np.count_nonzero(report.corrected != alice) <= 2
    assert report.corrections_per_pass[0] > report.corrections_per_pass[1] > report.corrections_per_pass[-1]
    assert report.residual_error_estimate < 1e-3


@pytest.mark.slow
def test_five_percent_errors_residual_over_many_keys():
    residuals = []
    for trial in range(100):
        alice, bob = noisy_pair(10_000, 0.05, 100 + trial)
        report = reconcile(alice, bob, rng=random_stream(100, trial))
        residuals.append(np.count_nonzero(report.corrected != alice) / alice.size)
    assert np.mean(residuals) < 1e-3


def test_reconcile_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        reconcile([0, 1, 1], [0, 1])
    with pytest.raises(InvalidArgumentError):
        reconcile([0, 1], [0, 1], block_size=1)
    with pytest.raises(InvalidArgumentError):
        reconcile([0, 1], [0, 1], passes=0)
    with pytest.raises(InvalidArgumentError):
        as_bits([0, 2, 1])
    with pytest.raises(InvalidArgumentError):
        as_bits([])


def test_final_key_length():
    assert final_key_length(800, 400, 10) == 390


def test_privacy_amplification_length_and_determinism():
    key, _ = noisy_pair(1_000, 0.0, 4)
    out = privacy_amplify(key, leaked=300, seed=9, security_margin=100)
    assert out.shape == (600,)
    assert set(np.unique(out)) <= {0, 1}
    assert np.array_equal(out, privacy_amplify(key, leaked=300, seed=9, security_margin=100))
    assert not np.array_equal(out, privacy_amplify(key, leaked=300, seed=10, security_margin=100))


def test_privacy_amplification_needs_something_left():
    key = np.ones(100, dtype=np.uint8)
    with pytest.raises(InvalidArgumentError):
        privacy_amplify(key, leaked=100, seed=0)
    with pytest.raises(InvalidArgumentError):
        privacy_amplify(key, leaked=90, seed=0, security_margin=20)
    with pytest.raises(InvalidArgumentError):
        privacy_amplify(key, leaked=-1, seed=0)


def test_hash_is_linear_over_gf2():
    x, _ = noisy_pair(700, 0.0, 5)
    y, _ = noisy_pair(700, 0.0, 6)
    hx = privacy_amplify(x, leaked=200, seed=3)
    hy = privacy_amplify(y, leaked=200, seed=3)
    assert np.array_equal(privacy_amplify(x ^ y, leaked=200, seed=3), hx ^ hy)


def test_hash_matches_explicit_toeplitz_matrix():
    # long enough that the hash is computed in several row chunks
    n = m = 2_100
    key, _ = noisy_pair(n, 0.0, 7)
    t = toeplitz_seed(n, m, seed=12)
    index = np.arange(m)[:, None] - np.arange(n)[None, :] + n - 1
    expected = (t[index].astype(np.int64) @ key.astype(np.int64)) % 2
    assert np.array_equal(privacy_amplify(key, leaked=0, seed=12), expected)


def test_hashed_bits_are_balanced(sigma):
    key, _ = noisy_pair(6_000, 0.0, 8)
    out = privacy_amplify(key, leaked=1_000, seed=21)
    assert abs(out.mean() - 0.5) < 4 * sigma(0.5, out.size)


def test_key_file_round_trip(tmp_path):
    bits, _ = noisy_pair(37, 0.0, 9)
    path = tmp_path / "nested" / "alice.key"
    write_key(str(path), bits)
    assert np.array_equal(read_key(str(path)), bits)
    assert encode_key([1, 0, 1]) == "3:a0"
    assert decode_key("3:a0").tolist() == [1, 0, 1]


def test_key_file_errors(tmp_path):
    with pytest.raises(DataError):
        read_key(str(tmp_path / "missing.key"))
    with pytest.raises(DataError):
        decode_key("not a key")
    with pytest.raises(DataError):
        decode_key("20:ff")
    two_lines = tmp_path / "two.key"
    two_lines.write_text("3:a0\n3:a0\n")
    with pytest.raises(DataError):
        read_key(str(two_lines))


def test_key_file_that_is_not_text(tmp_path):
    binary = tmp_path / "binary.key"
    binary.write_bytes(b"\xff\xfe\x00\x80")
    with pytest.raises(DataError):
        read_key(str(binary))
