"""Bit sources and line codes: PRBS, Gray PAM4, 8B/10B and Manchester-PAM4."""

import numpy as np

from ..errors import LengthError
from .eightbten import (
    RD_MINUS,
    RD_PLUS,
    DecodeFlags,
    decode_8b10b,
    encode_8b10b,
)
from .manchester import decode_manchester_pam4, encode_manchester_pam4
from .pam4 import LEVELS, as_bits, check_symbols, pam4_demap, pam4_map
from .prbs import prbs_generate


def bits_to_bytes(bits) -> np.ndarray:
    return np.packbits(as_bits(bits))


def bytes_to_bits(data) -> np.ndarray:
    return np.unpackbits(np.asarray(data, dtype=np.uint8))


LANE_COMBINE = ("linear", "gray")


def encode_8b10b_pam4(payload, combine: str = "linear") -> np.ndarray:
    """Two-lane 8B/10B followed by PAM4 mapping.

    Even-indexed payload bytes feed lane A, odd-indexed bytes lane B; each
    lane keeps its own running disparity, starting from RD-. Lane A drives
    the symbol MSB. With ``combine="linear"`` the LSB fed to the Gray mapper
    is ``A xor B``, so the transmitted level is ``2*(2A-1) + (2B-1)`` and both
    lanes' DC balance survives. ``combine="gray"`` feeds lane B directly.
    """
    if combine not in LANE_COMBINE:
        raise ValueError(f"unknown lane combination {combine!r}")
    bits = as_bits(payload)
    if bits.size % 16:
        raise LengthError("8B/10B-PAM4 payload length must be a multiple of 16 bits")
    data = bits_to_bytes(bits)
    lane_a, _ = encode_8b10b(data[0::2], RD_MINUS)
    lane_b, _ = encode_8b10b(data[1::2], RD_MINUS)
    merged = np.empty(2 * lane_a.size, dtype=np.uint8)
    merged[0::2] = lane_a
    merged[1::2] = lane_b ^ lane_a if combine == "linear" else lane_b
    return pam4_map(merged)


def decode_8b10b_pam4_bits(line_bits, combine: str = "linear") -> tuple[np.ndarray, DecodeFlags, DecodeFlags]:
    """Split demapped line bits into lanes, 8B/10B-decode each, re-merge bytes."""
    b = as_bits(line_bits)
    if b.size % 20:
        raise LengthError("8B/10B-PAM4 line length must be a multiple of 10 symbols")
    lane_a = b[0::2]
    lane_b = b[1::2] ^ lane_a if combine == "linear" else b[1::2]
    data_a, _, flags_a = decode_8b10b(lane_a, RD_MINUS)
    data_b, _, flags_b = decode_8b10b(lane_b, RD_MINUS)
    data = np.empty(2 * data_a.size, dtype=np.uint8)
    data[0::2] = data_a
    data[1::2] = data_b
    return bytes_to_bits(data), flags_a, flags_b


def decode_8b10b_pam4(symbols, combine: str = "linear") -> np.ndarray:
    bits, _, _ = decode_8b10b_pam4_bits(pam4_demap(symbols), combine)
    return bits


__all__ = [
    "LEVELS",
    "RD_MINUS",
    "RD_PLUS",
    "DecodeFlags",
    "bits_to_bytes",
    "bytes_to_bits",
    "check_symbols",
    "decode_8b10b",
    "decode_8b10b_pam4",
    "decode_8b10b_pam4_bits",
    "decode_manchester_pam4",
    "encode_8b10b",
    "encode_8b10b_pam4",
    "encode_manchester_pam4",
    "pam4_demap",
    "pam4_map",
    "prbs_generate",
]
