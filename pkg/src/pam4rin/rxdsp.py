"""Receiver DSP: frame sync, DD-LMS equalization, slicing, decoding, error counting."""

import csv
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import signal
from scipy.special import erfc

from . import linecode
from .errors import (
    AlignmentError,
    DivergenceError,
    DomainError,
    FramingError,
    LengthError,
    StabilityError,
)

FEC_THRESHOLD = 3.8e-3
SYNC_THRESHOLD = 0.5
DEFAULT_TAPS = 13
DEFAULT_MU = 1e-3
SCHEMES = ("uncoded", "8b10b", "manchester")


def slice_pam4(soft):
    """Hard decision with thresholds -2, 0, +2.

    A value exactly on a threshold goes to the lower-magnitude level
    (0.0 -> -1). Accepts scalars or arrays.
    """
    y = np.asarray(soft, dtype=float)
    if not np.isfinite(y).all():
        raise DomainError("cannot slice a non-finite value")
    out = np.where(y > 2, 3, np.where(y > 0, 1, np.where(y >= -2, -1, -3))).astype(np.int8)
    return int(out) if out.ndim == 0 else out


def lms_stability_bound(n_taps: int, input_power: float) -> float:
    return 2.0 / (n_taps * input_power)


@dataclass
class EqualizerState:
    """DD-LMS FIR equalizer state.

    ``input_power`` is the expected mean-square input used to validate
    ``mu``; pass ``None`` to skip the check.
    """

    n_taps: int = DEFAULT_TAPS
    mu: float = DEFAULT_MU
    input_power: float | None = 5.0
    samples_per_symbol_in: int = 1
    taps: np.ndarray | None = None
    mode: str = "training-directed"

    def __post_init__(self):
        if self.n_taps < 1:
            raise ValueError("n_taps must be positive")
        if self.samples_per_symbol_in not in (1, 2):
            raise ValueError("samples_per_symbol_in must be 1 or 2")
        if not self.mu > 0:
            raise StabilityError("mu must be positive")
        if self.input_power is not None:
            bound = lms_stability_bound(self.n_taps, self.input_power)
            if self.mu >= bound:
                raise StabilityError(
                    f"mu={self.mu:g} exceeds the LMS stability bound 2/(taps*P)={bound:.4g}"
                )
        if self.taps is None:
            self.taps = np.zeros(self.n_taps)
            self.taps[self.n_taps // 2] = 1.0
        else:
            self.taps = np.asarray(self.taps, dtype=float).copy()
            if self.taps.size != self.n_taps:
                raise ValueError("taps length does not match n_taps")

    @property
    def center(self) -> int:
        return self.n_taps // 2


@numba.njit(cache=True)
def _lms_kernel(x, start, n_out, sps, w, mu, training, record_every, traj):
    n_taps = w.size
    c = n_taps // 2
    y = np.empty(n_out)
    n_train = training.size
    rec = 0
    for k in range(n_out):
        base = start + k * sps - c
        acc = 0.0
        for j in range(n_taps):
            idx = base + j
            if 0 <= idx < x.size:
                acc += w[j] * x[idx]
        if not np.isfinite(acc) or abs(acc) > 1e150:
            return y, k
        y[k] = acc
        if k < n_train:
            d = training[k]
        elif acc > 2.0:
            d = 3.0
        elif acc > 0.0:
            d = 1.0
        elif acc >= -2.0:
            d = -1.0
        else:
            d = -3.0
        e = mu * (d - acc)
        for j in range(n_taps):
            idx = base + j
            if 0 <= idx < x.size:
                w[j] += e * x[idx]
        if record_every > 0 and k % record_every == 0:
            traj[rec, 0] = k
            for j in range(n_taps):
                traj[rec, j + 1] = w[j]
            rec += 1
    return y, -1


@dataclass
class EqualizerResult:
    soft: np.ndarray
    state: EqualizerState
    trajectory: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def trajectory_to_csv(self, path) -> None:
        write_tap_trajectory(path, self.trajectory, self.state.n_taps)


def write_tap_trajectory(path, trajectory, n_taps: int | None = None) -> None:
    """CSV with columns ``symbol_index,tap_0..tap_{n-1}``."""
    traj = np.asarray(trajectory, dtype=float)
    if n_taps is None:
        n_taps = traj.shape[1] - 1 if traj.ndim == 2 and traj.shape[1] else DEFAULT_TAPS
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["symbol_index"] + [f"tap_{j}" for j in range(n_taps)])
        for row in traj:
            w.writerow([int(row[0])] + [f"{v:.9g}" for v in row[1:]])


def dd_lms_equalize(
    rx,
    state: EqualizerState,
    training,
    start: int = 0,
    n_out: int | None = None,
    record_every: int = 0,
) -> EqualizerResult:
    """Adapt a symbol-spaced FIR by LMS and return pre-slicer outputs.

    Output ``k`` is centred on input sample ``start + k * sps``. The first
    ``len(training)`` outputs adapt towards the known training symbols,
    later ones towards their own hard decisions.
    """
    x = np.ascontiguousarray(getattr(rx, "samples", rx), dtype=float)
    sps = state.samples_per_symbol_in
    if n_out is None:
        n_out = (x.size - start) // sps
    if n_out <= 0:
        raise LengthError("no symbols to equalize")
    train = np.asarray(training, dtype=float)
    w = state.taps.copy()
    n_rec = (n_out + record_every - 1) // record_every if record_every > 0 else 0
    traj = np.zeros((n_rec, state.n_taps + 1))
    y, bad = _lms_kernel(x, start, n_out, sps, w, state.mu, train, record_every, traj)
    if bad >= 0:
        raise DivergenceError(bad)
    new_state = EqualizerState(
        n_taps=state.n_taps,
        mu=state.mu,
        input_power=None,
        samples_per_symbol_in=sps,
        taps=w,
        mode="decision-directed",
    )
    return EqualizerResult(y, new_state, traj)


def mmse_taps(channel, n_taps: int = DEFAULT_TAPS, symbol_power: float = 5.0, noise_var: float = 0.0, cursor: int | None = None):
    """Wiener solution for i.i.d. symbols through a symbol-spaced ``channel``.

    The received sample ``x[m]`` carries symbol ``m`` through ``channel[cursor]``
    (``cursor`` defaults to the largest tap). Taps follow the
    :func:`dd_lms_equalize` convention, centred on the current sample.
    Returns ``(taps, mmse)``.
    """
    h = np.asarray(channel, dtype=float)
    if cursor is None:
        cursor = int(np.argmax(np.abs(h)))
    c = n_taps // 2
    lo = -c - (h.size - 1 - cursor)
    hi = (n_taps - 1 - c) + cursor
    A = np.zeros((n_taps, hi - lo + 1))
    for j in range(n_taps):
        for i, hv in enumerate(h):
            A[j, -c + j + cursor - i - lo] += hv
    R = symbol_power * A @ A.T + noise_var * np.eye(n_taps)
    p = symbol_power * A[:, -lo]
    w = np.linalg.solve(R, p)
    return w, float(symbol_power - p @ w)


@dataclass
class SyncResult:
    sample_offset: int
    correlation_peak: float
    found: bool


def frame_sync(rx, training, search: int | None = None) -> SyncResult:
    """Locate ``training`` by normalized cross-correlation.

    Only offsets below ``search`` are considered when it is given.
    """
    x = np.asarray(getattr(rx, "samples", rx), dtype=float)
    t = np.asarray(training, dtype=float)
    L = t.size
    if x.size < L:
        raise LengthError("received stream is shorter than the training sequence")
    if search is not None:
        x = x[: min(x.size, search + L - 1)]
    t0 = t - t.mean()
    num = signal.correlate(x, t0, mode="valid", method="auto")
    c = np.concatenate(([0.0], np.cumsum(x)))
    c2 = np.concatenate(([0.0], np.cumsum(x * x)))
    s1 = c[L:] - c[:-L]
    s2 = c2[L:] - c2[:-L]
    energy = np.maximum(s2 - s1 * s1 / L, 0.0)
    den = np.sqrt(energy) * np.linalg.norm(t0)
    ncc = np.divide(num, den, out=np.zeros_like(num), where=den > 1e-12)
    k = int(np.argmax(ncc))
    peak = float(ncc[k])
    return SyncResult(k, peak, peak >= SYNC_THRESHOLD)


def payload_bits_per_line_symbol(scheme: str) -> float:
    return {"uncoded": 2.0, "8b10b": 1.6, "manchester": 1.0}[scheme]


def line_symbols_per_frame(scheme: str) -> int:
    """Smallest line-symbol count that decodes to a whole number of payload bits."""
    return {"uncoded": 1, "8b10b": 10, "manchester": 2}[scheme]


def decode_chain(soft, scheme: str, return_flags: bool = False):
    """Soft line values to payload bits.

    ``8b10b``: slice, PAM4 demap, split lanes, 8B/10B decode. ``manchester``:
    half-symbol pairs are combined first, then sliced and demapped.
    """
    y = np.asarray(soft, dtype=float).ravel()
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if y.size % line_symbols_per_frame(scheme):
        raise FramingError(f"{y.size} line symbols do not frame as {scheme}")
    flags = None
    if scheme == "uncoded":
        bits = linecode.pam4_demap(slice_pam4(y))
    elif scheme == "8b10b":
        bits, fa, fb = linecode.decode_8b10b_pam4_bits(linecode.pam4_demap(slice_pam4(y)))
        flags = (fa, fb)
    else:
        bits = linecode.pam4_demap(linecode.decode_manchester_pam4(y, "difference"))
    return (bits, flags) if return_flags else bits


@dataclass
class ErrorReport:
    bit_errors: int
    bits_compared: int
    symbol_errors: int
    symbols_compared: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_compared if self.bits_compared else 0.0

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.symbols_compared if self.symbols_compared else 0.0

    @property
    def fec_pass(self) -> bool:
        return self.ber <= FEC_THRESHOLD

    def __add__(self, other: "ErrorReport") -> "ErrorReport":
        return ErrorReport(
            self.bit_errors + other.bit_errors,
            self.bits_compared + other.bits_compared,
            self.symbol_errors + other.symbol_errors,
            self.symbols_compared + other.symbols_compared,
        )


def count_errors(tx, rx) -> ErrorReport:
    """Bit errors and 2-bit symbol errors between aligned streams."""
    a = np.asarray(tx, dtype=np.uint8).ravel()
    b = np.asarray(rx, dtype=np.uint8).ravel()
    if a.size != b.size:
        raise AlignmentError(f"stream lengths differ ({a.size} vs {b.size})")
    diff = a != b
    n_sym = a.size // 2
    sym = diff[: 2 * n_sym].reshape(-1, 2).any(axis=1)
    return ErrorReport(int(diff.sum()), int(a.size), int(sym.sum()), n_sym)


def q_function(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2))


def pam4_ser_awgn(d_over_sigma):
    """Symbol error rate of equiprobable 4-PAM in Gaussian noise."""
    return 1.5 * q_function(d_over_sigma)


def pam4_ber_awgn(d_over_sigma):
    """Gray-mapped 4-PAM bit error rate, SER/2."""
    return pam4_ser_awgn(d_over_sigma) / 2


def gaussian_ber_estimate(soft, reference) -> float:
    """Bit error rate predicted from per-level Gaussian statistics of ``soft``.

    Each transmitted level contributes the tail mass beyond its neighbouring
    slicer thresholds; Gray mapping counts one bit per adjacent-level error.
    """
    y = np.asarray(soft, dtype=float)
    ref = np.asarray(reference)
    total = 0.0
    for level, thresholds in ((-3, (-2,)), (-1, (-2, 0)), (1, (0, 2)), (3, (2,))):
        sel = ref == level
        if sel.sum() < 2:
            continue
        mu, sd = y[sel].mean(), y[sel].std()
        p = 0.0
        for t in thresholds:
            p += q_function(abs(t - mu) / sd) if sd > 0 else 0.0
        total += sel.mean() * p
    return float(total / 2)
