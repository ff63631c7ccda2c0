"""8B/10B line code (data characters) with running-disparity tracking.

Code groups are written in transmission order ``abcdei fghj``. Bytes are
``HGFEDCBA``; the low five bits select the 5b/6b sub-block and the high
three bits the 3b/4b sub-block (character ``D.x.y``).
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import LengthError

RD_MINUS = -1
RD_PLUS = 1

# 5b/6b: (RD- code, RD+ code)
_6B = [
    ("100111", "011000"),
    ("011101", "100010"),
    ("101101", "010010"),
    ("110001", "110001"),
    ("110101", "001010"),
    ("101001", "101001"),
    ("011001", "011001"),
    ("111000", "000111"),
    ("111001", "000110"),
    ("100101", "100101"),
    ("010101", "010101"),
    ("110100", "110100"),
    ("001101", "001101"),
    ("101100", "101100"),
    ("011100", "011100"),
    ("010111", "101000"),
    ("011011", "100100"),
    ("100011", "100011"),
    ("010011", "010011"),
    ("110010", "110010"),
    ("001011", "001011"),
    ("101010", "101010"),
    ("011010", "011010"),
    ("111010", "000101"),
    ("110011", "001100"),
    ("100110", "100110"),
    ("010110", "010110"),
    ("110110", "001001"),
    ("001110", "001110"),
    ("101110", "010001"),
    ("011110", "100001"),
    ("101011", "010100"),
]

# 3b/4b: (RD- code, RD+ code); index 8 is the alternate D.x.A7
_4B = [
    ("1011", "0100"),
    ("1001", "1001"),
    ("0101", "0101"),
    ("1100", "0011"),
    ("1101", "0010"),
    ("1010", "1010"),
    ("0110", "0110"),
    ("1110", "0001"),
    ("0111", "1000"),
]

# D.x.A7 replaces D.x.P7 to avoid a run of five in these positions.
_A7_MINUS = {17, 18, 20}
_A7_PLUS = {11, 13, 14}

# Control characters, (RD- group, RD+ group). Not emitted on the data path.
K_CODES = {
    "K.28.0": ("0011110100", "1100001011"),
    "K.28.1": ("0011111001", "1100000110"),
    "K.28.2": ("0011110101", "1100001010"),
    "K.28.3": ("0011110011", "1100001100"),
    "K.28.4": ("0011110010", "1100001101"),
    "K.28.5": ("0011111010", "1100000101"),
    "K.28.6": ("0011110110", "1100001001"),
    "K.28.7": ("0011111000", "1100000111"),
    "K.23.7": ("1110101000", "0001010111"),
    "K.27.7": ("1101101000", "0010010111"),
    "K.29.7": ("1011101000", "0100010111"),
    "K.30.7": ("0111101000", "1000010111"),
}


def _disparity(code: str) -> int:
    return 2 * code.count("1") - len(code)


def _next_rd(rd: int, code: str) -> int:
    d = _disparity(code)
    if d > 0:
        return RD_PLUS
    if d < 0:
        return RD_MINUS
    return rd


def _encode_one(byte: int, rd: int) -> tuple[str, int]:
    x, y = byte & 0x1F, byte >> 5
    six = _6B[x][0 if rd == RD_MINUS else 1]
    rd = _next_rd(rd, six)
    if y == 7 and ((rd == RD_MINUS and x in _A7_MINUS) or (rd == RD_PLUS and x in _A7_PLUS)):
        y = 8
    four = _4B[y][0 if rd == RD_MINUS else 1]
    return six + four, _next_rd(rd, four)


def _build_tables():
    # encode[rd_index, byte] -> (10-bit int, ending rd)
    enc_code = np.zeros((2, 256), dtype=np.int16)
    enc_rd = np.zeros((2, 256), dtype=np.int8)
    # decode[code] -> byte (-1 invalid); valid_from[code, rd_index]; end_rd[code, rd_index]
    dec_byte = np.full(1024, -1, dtype=np.int16)
    valid_from = np.zeros((1024, 2), dtype=bool)
    end_rd = np.zeros((1024, 2), dtype=np.int8)
    for ri, rd in enumerate((RD_MINUS, RD_PLUS)):
        for b in range(256):
            code, rd_out = _encode_one(b, rd)
            c = int(code, 2)
            enc_code[ri, b] = c
            enc_rd[ri, b] = rd_out
            dec_byte[c] = b
            valid_from[c, ri] = True
            end_rd[c, ri] = rd_out
    # bits of every 10-bit value, MSB first (transmission order)
    code_bits = ((np.arange(1024)[:, None] >> np.arange(9, -1, -1)) & 1).astype(np.uint8)
    return enc_code, enc_rd, dec_byte, valid_from, end_rd, code_bits


_ENC_CODE, _ENC_RD, _DEC_BYTE, _VALID_FROM, _END_RD, _CODE_BITS = _build_tables()
_CODE_DISPARITY = 2 * _CODE_BITS.sum(axis=1).astype(np.int16) - 10

# Plain-list views for the sequential disparity loops.
_ENC_CODE_L = _ENC_CODE.tolist()
_ENC_NEXT_L = ((_ENC_RD + 1) // 2).tolist()
_VALID_FROM_L = [tuple(v) if _DEC_BYTE[c] >= 0 else None for c, v in enumerate(_VALID_FROM.tolist())]
_END_NEXT_L = ((_END_RD + 1) // 2).tolist()
_DISP_L = _CODE_DISPARITY.tolist()


def _ri(rd: int) -> int:
    return 0 if rd == RD_MINUS else 1


@dataclass
class DecodeFlags:
    invalid_code_positions: list[int] = field(default_factory=list)
    disparity_error_positions: list[int] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.invalid_code_positions or self.disparity_error_positions)

    def shifted(self, offset: int) -> "DecodeFlags":
        return DecodeFlags(
            [i + offset for i in self.invalid_code_positions],
            [i + offset for i in self.disparity_error_positions],
        )


def encode_8b10b(payload, rd0: int = RD_MINUS) -> tuple[np.ndarray, int]:
    """Encode data bytes into 10-bit groups; returns (bits, final disparity)."""
    data = np.asarray(payload, dtype=np.int64).ravel()
    if data.size and (data.min() < 0 or data.max() > 255):
        raise ValueError("payload values must be bytes (0..255)")
    if rd0 not in (RD_MINUS, RD_PLUS):
        raise ValueError("running disparity must be -1 or +1")
    codes = np.empty(data.size, dtype=np.int16)
    rd = _ri(rd0)
    enc_code, enc_next = _ENC_CODE_L, _ENC_NEXT_L
    out = [0] * data.size
    for i, b in enumerate(data.tolist()):
        out[i] = enc_code[rd][b]
        rd = enc_next[rd][b]
    codes[:] = out
    return _CODE_BITS[codes].ravel(), (RD_MINUS, RD_PLUS)[rd]


def decode_8b10b(bits, rd0: int = RD_MINUS) -> tuple[np.ndarray, int, DecodeFlags]:
    """Decode 10-bit groups back to bytes.

    Groups outside the data code set decode to 0x00 and are flagged invalid.
    A valid group that the current disparity could not have produced is
    flagged, and the tracked disparity follows the received group.
    """
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if b.size % 10:
        raise LengthError("8B/10B input length must be a multiple of 10")
    groups = b.reshape(-1, 10)
    codes = groups.astype(np.int64) @ (1 << np.arange(9, -1, -1))
    raw = _DEC_BYTE[codes]
    out = np.where(raw < 0, 0, raw).astype(np.uint8)

    flags = DecodeFlags()
    rd = _ri(rd0)
    valid_from, end_next, disp = _VALID_FROM_L, _END_NEXT_L, _DISP_L
    for i, c in enumerate(codes.tolist()):
        ok = valid_from[c]
        if ok is None:
            flags.invalid_code_positions.append(i)
            d = disp[c]
            if d:
                rd = 0 if d < 0 else 1
            continue
        if not ok[rd]:
            flags.disparity_error_positions.append(i)
            rd = 1 - rd
        rd = end_next[c][rd]
    return out, (RD_MINUS, RD_PLUS)[rd], flags


def encode_control(name: str, rd: int = RD_MINUS) -> tuple[np.ndarray, int]:
    code = K_CODES[name][0 if rd == RD_MINUS else 1]
    bits = np.array([int(c) for c in code], dtype=np.uint8)
    return bits, _next_rd(_next_rd(rd, code[:6]), code[6:])
