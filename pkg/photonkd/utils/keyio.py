"""
Key files: one line ``<nbits>:<hex>`` holding the bits MSB-first, padded with
zeros to a whole number of bytes.
"""
import logging
import os
from typing import Sequence, Union

import numpy as np

from ..errors import DataError

logger = logging.getLogger("photonkd.keyio")


def encode_key(bits: Union[Sequence[int], np.ndarray]) -> str:
    array = np.asarray(bits, dtype=np.uint8).reshape(-1)
    return f"{array.size}:{np.packbits(array).tobytes().hex()}"


def decode_key(line: str) -> np.ndarray:
    """
    Parse one ``<nbits>:<hex>`` line.

    Raises:
        DataError: malformed line or hex too short for the stated length
    """
    try:
        count_text, hex_text = line.strip().split(":", 1)
        n_bits = int(count_text)
        raw = bytes.fromhex(hex_text)
    except ValueError as e:
        raise DataError(f"Malformed key line: {e}") from None
    if n_bits < 0 or len(raw) * 8 < n_bits:
        raise DataError(f"Key line declares {n_bits} bits but holds {len(raw) * 8}")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n_bits]


def write_key(path: str, bits: Union[Sequence[int], np.ndarray]):
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    with open(path, "w", encoding="utf-8") as f:
        f.write(encode_key(bits) + "\n")
    logger.debug("Wrote %d key bits to %s", np.asarray(bits).size, path)


def read_key(path: str) -> np.ndarray:
    if not os.path.isfile(path):
        raise DataError(f"Key file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in f.read().splitlines() if line.strip()]
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot read key file {path}: {e}") from None
    if len(lines) != 1:
        raise DataError(f"{path}: expected exactly one key line, found {len(lines)}")
    bits = decode_key(lines[0])
    logger.debug("Read %d key bits from %s", bits.size, path)
    return bits
