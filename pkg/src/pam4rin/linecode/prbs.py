"""Maximal-length Fibonacci LFSR bit sources."""

import numpy as np

from ..errors import ConfigurationError, InvalidSeedError, LengthError

# Feedback taps of primitive polynomials, one per register length.
TAPS = {
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 6, 4, 1),
    13: (13, 4, 3, 1),
    14: (14, 5, 3, 1),
    15: (15, 14),
    16: (16, 15, 13, 4),
    17: (17, 14),
    18: (18, 11),
    19: (19, 6, 2, 1),
    20: (20, 17),
    21: (21, 19),
    22: (22, 21),
    23: (23, 18),
    24: (24, 23, 22, 17),
    25: (25, 22),
    26: (26, 6, 2, 1),
    27: (27, 5, 2, 1),
    28: (28, 25),
    29: (29, 27),
    30: (30, 6, 4, 1),
    31: (31, 28),
}


def prbs_generate(order: int = 16, seed: int = 1, length: int = 2**16 - 1) -> np.ndarray:
    """Return ``length`` bits of the PRBS of the given ``order``.

    The register is shifted right; bit ``order - t`` of the state feeds the
    XOR for tap ``t`` and the LSB is emitted. Output repeats with period
    ``2**order - 1``.
    """
    if order not in TAPS:
        raise ConfigurationError(f"no primitive polynomial stored for PRBS order {order}")
    if length < 1:
        raise LengthError("PRBS length must be at least 1")
    mask = (1 << order) - 1
    state = seed & mask
    if seed == 0 or state == 0:
        raise InvalidSeedError("PRBS seed must be nonzero")

    shifts = [order - t for t in TAPS[order]]
    period = mask
    n = min(length, period)
    out = bytearray(n)
    for i in range(n):
        out[i] = state & 1
        fb = 0
        for s in shifts:
            fb ^= state >> s
        state = (state >> 1) | ((fb & 1) << (order - 1))
    bits = np.frombuffer(bytes(out), dtype=np.uint8)
    if length > n:
        bits = np.resize(bits, length)
    return bits.copy()
