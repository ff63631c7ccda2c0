"""Manchester coding on top of PAM4: each symbol s is sent as (s, -s)."""

import numpy as np

from ..errors import LengthError
from .pam4 import check_symbols

MODES = ("difference", "first-half")


def encode_manchester_pam4(symbols) -> np.ndarray:
    s = check_symbols(symbols)
    out = np.empty(2 * s.size, dtype=np.int8)
    out[0::2] = s
    out[1::2] = -s
    return out


def decode_manchester_pam4(soft_halfsymbols, mode: str = "difference") -> np.ndarray:
    from ..rxdsp import slice_pam4

    y = np.asarray(soft_halfsymbols, dtype=float).ravel()
    if y.size % 2:
        raise LengthError("Manchester decoding needs an even number of half-symbols")
    if mode == "difference":
        est = 0.5 * (y[0::2] - y[1::2])
    elif mode == "first-half":
        est = y[0::2]
    else:
        raise ValueError(f"unknown Manchester decode mode {mode!r}")
    return slice_pam4(est)
