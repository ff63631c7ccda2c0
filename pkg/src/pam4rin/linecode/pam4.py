"""Gray-coded PAM4 symbol mapping."""

import numpy as np

from ..errors import AlphabetError, LengthError

LEVELS = np.array([-3, -1, 1, 3], dtype=np.int8)

# index = 2*msb + lsb  ->  00:-3, 01:-1, 10:+3, 11:+1
_GRAY_LEVEL = np.array([-3, -1, 3, 1], dtype=np.int8)
# (level + 3) // 2 -> (msb, lsb)
_LEVEL_BITS = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.uint8)


def as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise AlphabetError("bit stream contains values other than 0 and 1")
    return arr.astype(np.uint8, copy=False).ravel()


def check_symbols(symbols) -> np.ndarray:
    arr = np.asarray(symbols)
    if arr.size and not np.isin(arr, LEVELS).all():
        bad = arr[~np.isin(arr, LEVELS)].ravel()[0]
        raise AlphabetError(f"symbol {bad!r} is not a PAM4 level")
    return arr.astype(np.int8, copy=False).ravel()


def pam4_map(bits) -> np.ndarray:
    b = as_bits(bits)
    if b.size % 2:
        raise LengthError("PAM4 mapping needs an even number of bits")
    idx = 2 * b[0::2] + b[1::2]
    return _GRAY_LEVEL[idx]


def pam4_demap(symbols) -> np.ndarray:
    s = check_symbols(symbols)
    return _LEVEL_BITS[(s.astype(np.int16) + 3) // 2].ravel()
