"""Sampled waveforms: synthesis, rate conversion, normalization and spectra."""

import csv
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal

from .errors import ConfigurationError, DegenerateSignalError, LengthError

WELCH_SEGMENT = 4096
WELCH_OVERLAP = 0.5
NOTCH_THRESHOLD_DB = -3.0

RESAMPLE_TAPS_PER_PHASE = 32
RESAMPLE_KAISER_BETA = 8.0


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ConfigurationError("sample_rate must be positive")
        s = np.asarray(self.samples, dtype=float)
        if not np.isfinite(s).all():
            raise ValueError("waveform samples must be finite")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class Psd:
    """Single-sided power spectral density, linear units per Hz."""

    freqs: np.ndarray
    values: np.ndarray

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def db(self, reference: float = 1.0) -> np.ndarray:
        return 10 * np.log10(np.maximum(self.values, 1e-300) / reference)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["freq_hz", "psd_db"])
            for f, v in zip(self.freqs, self.db()):
                w.writerow([f"{f:.9g}", f"{v:.9g}"])


@dataclass(frozen=True)
class PulseShape:
    kind: str = "nrz-rect"
    rise_time_fraction: float = 0.25

    def __post_init__(self):
        if self.kind not in ("nrz-rect", "raised-cosine-edge"):
            raise ConfigurationError(f"unknown pulse shape {self.kind!r}")
        if not 0.0 <= self.rise_time_fraction <= 0.5:
            raise ConfigurationError("rise_time_fraction must lie in [0, 0.5]")


def synthesize(symbols, baud: float, samples_per_symbol: int, shape: PulseShape | None = None) -> Waveform:
    """Hold each symbol for ``samples_per_symbol`` samples.

    With ``raised-cosine-edge`` the level changes follow a raised-cosine
    transition lasting ``rise_time_fraction`` of a symbol, centred on the
    symbol boundary.
    """
    shape = shape or PulseShape()
    if samples_per_symbol < 2:
        raise ConfigurationError("samples_per_symbol must be at least 2")
    if not baud > 0:
        raise ConfigurationError("baud must be positive")
    sym = np.asarray(symbols, dtype=float).ravel()
    if sym.size == 0:
        raise LengthError("cannot synthesize an empty symbol stream")
    x = np.repeat(sym, samples_per_symbol)
    if shape.kind == "raised-cosine-edge":
        n_edge = int(round(shape.rise_time_fraction * samples_per_symbol))
        if n_edge >= 1:
            # integrating a Hann pulse gives the raised-cosine edge
            k = signal.windows.hann(n_edge + 2)[1:-1]
            k /= k.sum()
            pad = k.size // 2
            xp = np.pad(x, (pad, k.size - 1 - pad), mode="edge")
            x = np.convolve(xp, k, mode="valid")
    return Waveform(x, baud * samples_per_symbol)


def welch_psd(
    w: Waveform,
    segment_len: int = WELCH_SEGMENT,
    overlap_fraction: float = WELCH_OVERLAP,
    window: str = "hann",
) -> Psd:
    if window != "hann":
        raise ConfigurationError("only the Hann window is supported")
    if not 0 <= overlap_fraction < 1:
        raise ConfigurationError("overlap_fraction must lie in [0, 1)")
    if segment_len > len(w) or segment_len < 2:
        raise LengthError(f"segment length {segment_len} does not fit a signal of {len(w)} samples")
    f, p = signal.welch(
        w.samples,
        fs=w.sample_rate,
        window="hann",
        nperseg=segment_len,
        noverlap=int(segment_len * overlap_fraction),
        detrend=False,
        scaling="density",
        return_onesided=True,
    )
    return Psd(f, p)


def notch_width(psd: Psd, baud: float, threshold_db: float = NOTCH_THRESHOLD_DB) -> float:
    """Width of the low-frequency spectral notch, in Hz.

    The reference is the median PSD over ``[0.1, 0.4] * baud``. The notch
    ends where the PSD first comes within ``|threshold_db|`` of it; the
    crossing is interpolated linearly in dB between bins.
    """
    if psd.values.size == 0:
        raise LengthError("empty PSD")
    if threshold_db >= 0:
        raise ConfigurationError("threshold_db must be negative")
    if psd.freqs[-1] < 0.4 * baud:
        raise LengthError("PSD does not reach the passband reference band")
    band = (psd.freqs >= 0.1 * baud) & (psd.freqs <= 0.4 * baud)
    ref_db = 10 * np.log10(np.median(psd.values[band]))
    level = psd.db() - (ref_db + threshold_db)
    above = np.flatnonzero(level >= 0)
    if above.size == 0:
        return float(psd.freqs[-1])
    k = int(above[0])
    if k == 0:
        return 0.0
    f0, f1 = psd.freqs[k - 1], psd.freqs[k]
    l0, l1 = level[k - 1], level[k]
    return float(f0 + (f1 - f0) * (-l0) / (l1 - l0))


def _resample_filter(up: int, down: int) -> np.ndarray:
    n = RESAMPLE_TAPS_PER_PHASE * max(up, down) + 1
    # resample_poly applies the interpolation gain ``up`` itself
    return signal.firwin(n, 1.0 / max(up, down), window=("kaiser", RESAMPLE_KAISER_BETA))


def resample(w: Waveform, new_rate: float) -> Waveform:
    """Polyphase windowed-sinc rate conversion."""
    if not new_rate > 0:
        raise ConfigurationError("new_rate must be positive")
    ratio = Fraction(new_rate / w.sample_rate).limit_denominator(1000)
    if ratio == 1:
        return Waveform(w.samples.copy(), w.sample_rate)
    up, down = ratio.numerator, ratio.denominator
    n_out = -(-len(w) * up // down)
    if n_out < 2:
        raise LengthError("resampled waveform would have fewer than 2 samples")
    y = signal.resample_poly(w.samples, up, down, window=_resample_filter(up, down))
    return Waveform(y, w.sample_rate * up / down)


def normalize(w: Waveform) -> Waveform:
    """Zero mean, unit variance."""
    if len(w) == 0:
        raise LengthError("cannot normalize an empty waveform")
    x = w.samples - w.samples.mean()
    sd = x.std()
    if sd == 0 or not np.isfinite(sd) or sd < 1e-12 * max(1.0, np.abs(w.samples).max()):
        raise DegenerateSignalError("cannot normalize a constant waveform")
    x = x / sd
    x -= x.mean()
    return Waveform(x, w.sample_rate)
