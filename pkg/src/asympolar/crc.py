"""CRC-16 with generator 0x1021 (x^16 + x^12 + x^5 + 1), zero register, no reflection."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .core import as_bits

POLY = 0x1021
WIDTH = 16


def crc16_remainder(bits) -> np.ndarray:
    """Remainder bits (MSB first) of the message times x^16 divided by the generator."""
    reg = 0
    for b in as_bits(bits).reshape(-1):
        top = (reg >> (WIDTH - 1)) & 1
        reg = (reg << 1) & 0xFFFF
        if top ^ int(b):
            reg ^= POLY
    return np.array([(reg >> (WIDTH - 1 - i)) & 1 for i in range(WIDTH)], dtype=np.uint8)


def crc16_append(payload) -> np.ndarray:
    payload = as_bits(payload).reshape(-1)
    return np.concatenate([payload, crc16_remainder(payload)])


def crc16_check(codeword) -> bool:
    codeword = as_bits(codeword).reshape(-1)
    if codeword.size < WIDTH:
        return False
    return bool(np.array_equal(crc16_remainder(codeword[:-WIDTH]), codeword[-WIDTH:]))


@lru_cache(maxsize=64)
def _crc_matrix(n_payload: int) -> np.ndarray:
    # the zero-init CRC is linear: row i is the remainder of the unit vector e_i
    eye = np.eye(n_payload, dtype=np.uint8)
    m = np.array([crc16_remainder(row) for row in eye], dtype=np.int64).reshape(n_payload, WIDTH)
    m.setflags(write=False)
    return m


def crc16_batch(payloads: np.ndarray) -> np.ndarray:
    """Remainders for a (..., n_payload) array of payloads."""
    payloads = np.asarray(payloads, dtype=np.int64)
    n = payloads.shape[-1]
    if n == 0:
        return np.zeros(payloads.shape[:-1] + (WIDTH,), dtype=np.uint8)
    return ((payloads @ _crc_matrix(n)) & 1).astype(np.uint8)
