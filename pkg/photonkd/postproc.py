"""
Classical post-processing of sifted keys: blocked-parity reconciliation and
Toeplitz-hash privacy amplification.

Every parity exchanged over the public channel is charged one bit of leakage.
"""
import logging
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import toeplitz

from .core import RandomStream, random_stream
from .errors import InvalidArgumentError

logger = logging.getLogger("photonkd.postproc")

BitsLike = Union[Sequence[int], np.ndarray]

# Rows of the hash matrix materialized at a time.
HASH_CHUNK_ROWS = 1024


class ReconcileReport(NamedTuple):
    corrected: np.ndarray
    parity_bits_leaked: int
    residual_error_estimate: float
    passes: int
    corrections_per_pass: List[int]


def as_bits(bits: BitsLike) -> np.ndarray:
    """
    Validate a bit string and return it as a 1-D uint8 array.

    Raises:
        InvalidArgumentError: empty input or entries other than 0 and 1
    """
    array = np.asarray(bits).reshape(-1)
    if array.size == 0:
        raise InvalidArgumentError("Bit string is empty")
    if not np.isin(array, (0, 1)).all():
        raise InvalidArgumentError("Bit string may only contain 0 and 1")
    return array.astype(np.uint8)


def _parity(bits: np.ndarray) -> int:
    return int(np.bitwise_xor.reduce(bits)) if bits.size else 0


def _binary_search(alice: np.ndarray, bob: np.ndarray, positions: np.ndarray) -> Tuple[int, int]:
    """Locate one error in a block with odd parity difference; returns (position, parities revealed)."""
    revealed = 0
    while positions.size > 1:
        half = positions[: positions.size // 2]
        revealed += 1
        if _parity(alice[half]) != _parity(bob[half]):
            positions = half
        else:
            positions = positions[positions.size // 2 :]
    return int(positions[0]), revealed


def reconcile(
    alice: BitsLike,
    bob: BitsLike,
    block_size: int = 8,
    passes: int = 4,
    rng: Optional[RandomStream] = None,
) -> ReconcileReport:
    """
    Correct Bob's key towards Alice's by comparing block parities.

    The first pass splits the key in its natural order; later passes use a
    fresh random permutation. A block whose parities differ is bisected
    until the erroneous bit is found and flipped. Errors that cancel in
    pairs within a block survive the pass.

    Args:
        alice: Reference key; never modified
        bob: Key to correct
        block_size: Bits per parity block, at least 2
        passes: Number of passes, at least 1
        rng: Stream for the permutations; seed 0 when omitted

    Returns:
        ReconcileReport with Bob's corrected key and the leakage count
    """
    a = as_bits(alice)
    b = as_bits(bob).copy()
    if a.size != b.size:
        raise InvalidArgumentError(f"Key lengths differ: {a.size} vs {b.size}")
    if block_size < 2:
        raise InvalidArgumentError(f"Block size must be at least 2, got {block_size}")
    if passes < 1:
        raise InvalidArgumentError(f"Number of passes must be at least 1, got {passes}")
    rng = rng if rng is not None else random_stream(0)

    n = a.size
    starts = np.arange(0, n, block_size)
    leaked = 0
    corrections: List[int] = []
    for pass_index in range(passes):
        order = np.arange(n) if pass_index == 0 else rng.permutation(n)
        alice_parities = np.add.reduceat(a[order].astype(np.int64), starts) % 2
        bob_parities = np.add.reduceat(b[order].astype(np.int64), starts) % 2
        leaked += starts.size

        fixed = 0
        for block in np.flatnonzero(alice_parities != bob_parities):
            positions = order[starts[block] : starts[block] + block_size]
            position, revealed = _binary_search(a, b, positions)
            b[position] ^= 1
            leaked += revealed
            fixed += 1
        corrections.append(fixed)
        logger.debug("Reconciliation pass %d: %d blocks corrected", pass_index + 1, fixed)

    residual = corrections[-1] / n
    logger.info("Reconciled %d bits in %d passes, %d parity bits leaked", n, passes, leaked)
    return ReconcileReport(b, leaked, residual, passes, corrections)


def final_key_length(n: int, leaked: int, security_margin: int = 0) -> int:
    """Length left after removing leaked parities and the security margin."""
    return n - leaked - security_margin


def toeplitz_seed(n: int, m: int, seed: int) -> np.ndarray:
    """The n + m - 1 random bits defining an m x n Toeplitz matrix."""
    return np.random.default_rng(seed).integers(0, 2, size=n + m - 1, dtype=np.uint8)


def privacy_amplify(key: BitsLike, leaked: int, seed: int, security_margin: int = 0) -> np.ndarray:
    """
    Compress a reconciled key with a seeded Toeplitz hash over GF(2).

    Row i, column j of the matrix is t[i - j + n - 1] for the bit string t
    returned by ``toeplitz_seed``, so the hash is fixed by (n, m, seed).

    Args:
        key: Reconciled key of n bits
        leaked: Bits revealed during reconciliation
        seed: Seed of the hash matrix
        security_margin: Extra bits removed on top of the leakage

    Returns:
        n - leaked - security_margin output bits
    """
    bits = as_bits(key)
    n = bits.size
    if leaked < 0 or security_margin < 0:
        raise InvalidArgumentError("Leakage and security margin cannot be negative")
    m = final_key_length(n, leaked, security_margin)
    if m <= 0:
        raise InvalidArgumentError(
            f"Nothing left to extract: {n} bits - {leaked} leaked - {security_margin} margin = {m}"
        )

    t = toeplitz_seed(n, m, seed)
    x = bits.astype(np.int64)
    out = np.empty(m, dtype=np.uint8)
    for i0 in range(0, m, HASH_CHUNK_ROWS):
        i1 = min(i0 + HASH_CHUNK_ROWS, m)
        rows = toeplitz(t[i0 + n - 1 : i1 + n - 1], t[i0 : i0 + n][::-1])
        out[i0:i1] = (rows.astype(np.int64) @ x) % 2
    logger.info("Privacy amplification: %d -> %d bits", n, m)
    return out
