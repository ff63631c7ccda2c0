"""Intensity-domain link model: RIN synthesis, MZM, photoreceiver, RIN metrics."""

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import fft as sfft
from scipy import integrate, signal

from .errors import ConfigurationError, CoverageError, DomainError, RangeError
from .waveform import Waveform, welch_psd

Q_ELECTRON = 1.602176634e-19
RIN_SANITY_DB = -80.0


@dataclass(frozen=True)
class RinProfile:
    """Piecewise-constant single-sided RIN, dB/Hz.

    ``breakpoints[i] = (f_i, rin_i)`` holds on ``[f_i, f_{i+1})``; the last
    level extends up to ``f_max``.
    """

    breakpoints: tuple[tuple[float, float], ...]
    f_max: float = math.inf
    name: str = ""

    def __post_init__(self):
        bp = tuple((float(f), float(r)) for f, r in self.breakpoints)
        if not bp:
            raise ConfigurationError("RIN profile needs at least one breakpoint")
        freqs = [f for f, _ in bp]
        if freqs[0] != 0.0:
            raise ConfigurationError("first RIN breakpoint must be at 0 Hz")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ConfigurationError("RIN breakpoint frequencies must be strictly increasing")
        if any(r > RIN_SANITY_DB for _, r in bp):
            raise ConfigurationError(f"RIN levels must not exceed {RIN_SANITY_DB} dB/Hz")
        if self.f_max <= freqs[-1]:
            raise ConfigurationError("f_max must lie above the last breakpoint")
        object.__setattr__(self, "breakpoints", bp)

    @classmethod
    def flat(cls, rin_db: float, name: str = "") -> "RinProfile":
        return cls(((0.0, rin_db),), name=name)

    @classmethod
    def disabled(cls) -> "RinProfile":
        return cls(((0.0, -math.inf),), name="off")

    @property
    def enabled(self) -> bool:
        return any(np.isfinite(r) for _, r in self.breakpoints)

    def linear(self, f) -> np.ndarray:
        """RIN density in 1/Hz at frequencies ``f``."""
        f = np.asarray(f, dtype=float)
        edges = np.array([b[0] for b in self.breakpoints])
        lin = np.array([10 ** (b[1] / 10) for b in self.breakpoints])
        idx = np.searchsorted(edges, f, side="right") - 1
        return lin[np.clip(idx, 0, None)]

    def check_covers(self, f_hi: float) -> None:
        if f_hi > self.f_max * (1 + 1e-12):
            raise CoverageError(f"RIN profile covers up to {self.f_max:g} Hz, needed {f_hi:g} Hz")

    def integral(self, f_lo: float, f_hi: float) -> float:
        """Integral of the linear RIN density over ``[f_lo, f_hi]``."""
        self.check_covers(f_hi)
        edges = [b[0] for b in self.breakpoints] + [math.inf]
        total = 0.0
        for (f0, r), f1 in zip(self.breakpoints, edges[1:]):
            lo, hi = max(f0, f_lo), min(f1, f_hi)
            if hi > lo and np.isfinite(r):
                total += 10 ** (r / 10) * (hi - lo)
        return total


@dataclass(frozen=True)
class RinSpectrum:
    freqs: np.ndarray
    rin_db_per_hz: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["freq_hz", "rin_db_per_hz"])
            for f, v in zip(self.freqs, self.rin_db_per_hz):
                w.writerow([f"{f:.9g}", f"{v:.9g}"])


@dataclass(frozen=True)
class ChannelConfig:
    received_power_dBm: float = -7.0
    responsivity_A_per_W: float = 0.8
    thermal_noise_A_per_sqrtHz: float = 18e-12
    rx_bandwidth_Hz: float = 20e9
    rx_filter_order: int = 4
    ac_coupling_cutoff_Hz: float = 0.0
    include_shot_noise: bool = False
    vpi_V: float = 3.0
    mod_index: float = 0.5
    seed: int = 1

    def __post_init__(self):
        if not self.rx_bandwidth_Hz > 0:
            raise ConfigurationError("rx_bandwidth_Hz must be positive")
        if not self.responsivity_A_per_W > 0:
            raise ConfigurationError("responsivity_A_per_W must be positive")
        if not 0 < self.mod_index <= 1:
            raise ConfigurationError("mod_index must lie in (0, 1]")
        if self.thermal_noise_A_per_sqrtHz < 0:
            raise ConfigurationError("thermal_noise_A_per_sqrtHz must be non-negative")
        if self.ac_coupling_cutoff_Hz < 0:
            raise ConfigurationError("ac_coupling_cutoff_Hz must be non-negative")
        if self.rx_filter_order < 1:
            raise ConfigurationError("rx_filter_order must be at least 1")

    @property
    def received_power_W(self) -> float:
        return 1e-3 * 10 ** (self.received_power_dBm / 10)

    def with_(self, **changes) -> "ChannelConfig":
        return replace(self, **changes)


def synthesize_rin_noise(profile: RinProfile, n: int, fs: float, seed: int) -> np.ndarray:
    """Gaussian relative-intensity fluctuation m(t) with PSD ``profile``.

    White noise is shaped in the frequency domain so that the single-sided
    PSD of the output equals the profile; the DC bin is removed. The
    transform runs on the next fast FFT length and is truncated to ``n``.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    profile.check_covers(fs / 2)
    if not profile.enabled:
        return np.zeros(n)
    rng = np.random.default_rng(seed)
    n_fft = sfft.next_fast_len(n, real=True)
    spec = sfft.rfft(rng.standard_normal(n_fft))
    f = sfft.rfftfreq(n_fft, 1 / fs)
    spec *= np.sqrt(profile.linear(f) * fs / 2)
    spec[0] = 0.0
    return sfft.irfft(spec, n_fft)[:n]


def predistort(x: Waveform, mod_index: float) -> Waveform:
    """Drive voltage (in units of V_pi) that makes the quadrature MZM linear in ``x``."""
    u = mod_index * x.samples
    if np.abs(u).max(initial=0.0) > 1 + 1e-12:
        raise RangeError("|mod_index * x| exceeds 1; arcsine predistortion undefined")
    return Waveform(np.arcsin(np.clip(u, -1, 1)) / np.pi, x.sample_rate)


def mzm_modulate(drive: Waveform, p_avg_W: float) -> Waveform:
    """Quadrature-biased MZM intensity, ``P = p_avg (1 + sin(pi v))``."""
    return Waveform(p_avg_W * (1 + np.sin(np.pi * drive.samples)), drive.sample_rate)


def receiver_filters(cfg: ChannelConfig, fs: float) -> list[np.ndarray]:
    """Second-order sections of the active receiver filters, in signal order."""
    out = []
    if cfg.ac_coupling_cutoff_Hz > 0:
        out.append(signal.butter(1, cfg.ac_coupling_cutoff_Hz, "highpass", fs=fs, output="sos"))
    if cfg.rx_bandwidth_Hz < fs / 2:
        out.append(
            signal.bessel(cfg.rx_filter_order, cfg.rx_bandwidth_Hz, "low", norm="mag", fs=fs, output="sos")
        )
    return out


def apply_filters(x: np.ndarray, sections: list[np.ndarray]) -> np.ndarray:
    for sos in sections:
        # start from the steady state for the first sample
        zi = signal.sosfilt_zi(sos) * x[0]
        x, _ = signal.sosfilt(sos, x, zi=zi)
    return x


def noise_equivalent_bandwidth(cfg: ChannelConfig, fs: float, n_points: int = 1 << 16) -> float:
    """NEB of the receiver filter chain, normalised to its peak power gain."""
    sections = receiver_filters(cfg, fs)
    f = np.linspace(0, fs / 2, n_points)
    h2 = np.ones_like(f)
    for sos in sections:
        _, h = signal.sosfreqz(sos, worN=f, fs=fs)
        h2 *= np.abs(h) ** 2
    return float(integrate.trapezoid(h2, f) / h2.max())


def apply_channel(intensity: Waveform, profile: RinProfile, cfg: ChannelConfig) -> Waveform:
    """Photocurrent (A) for an optical intensity waveform.

    The intensity is rescaled to the configured received power, multiplied by
    ``1 + m(t)`` with ``m`` the synthesized RIN, detected, corrupted by white
    thermal (and optionally shot) noise, then AC-coupled and low-pass filtered.
    """
    p = intensity.samples
    fs = intensity.sample_rate
    if (p < 0).any():
        raise DomainError("optical intensity must be non-negative")
    mean = p.mean()
    if not mean > 0:
        raise DomainError("optical intensity has zero mean")
    profile.check_covers(fs / 2)
    n = p.size
    p_rx = p * (cfg.received_power_W / mean)
    ss = np.random.SeedSequence(cfg.seed)
    rin_seed, th_seed, shot_seed = ss.spawn(3)

    m = synthesize_rin_noise(profile, n, fs, rin_seed)
    i = cfg.responsivity_A_per_W * p_rx * (1 + m)
    if cfg.thermal_noise_A_per_sqrtHz > 0:
        sigma = cfg.thermal_noise_A_per_sqrtHz * math.sqrt(fs / 2)
        i = i + sigma * np.random.default_rng(th_seed).standard_normal(n)
    if cfg.include_shot_noise:
        i_dc = np.maximum(cfg.responsivity_A_per_W * p_rx * (1 + m), 0)
        i = i + np.sqrt(Q_ELECTRON * i_dc * fs) * np.random.default_rng(shot_seed).standard_normal(n)
    return Waveform(apply_filters(i, receiver_filters(cfg, fs)), fs)


def measure_rin(intensity: Waveform, segment_len: int = 4096) -> RinSpectrum:
    """Welch PSD of the intensity fluctuation over the squared mean, DC bin dropped."""
    p = intensity.samples
    mean = p.mean()
    if not mean > 0:
        raise DomainError("intensity mean must be positive to measure RIN")
    psd = welch_psd(Waveform(p - mean, intensity.sample_rate), min(segment_len, p.size))
    rin = psd.values[1:] / mean**2
    return RinSpectrum(psd.freqs[1:], 10 * np.log10(np.maximum(rin, 1e-300)))


def average_rin(source, band_Hz: tuple[float, float]) -> float:
    """Band-averaged RIN in dB/Hz, averaged in the linear domain."""
    f_lo, f_hi = band_Hz
    if not f_hi > f_lo >= 0:
        raise ValueError("band must satisfy f_hi > f_lo >= 0")
    if isinstance(source, RinProfile):
        return 10 * math.log10(source.integral(f_lo, f_hi) / (f_hi - f_lo))
    freqs, vals = source.freqs, source.rin_db_per_hz
    df = freqs[1] - freqs[0] if freqs.size > 1 else 0.0
    if f_hi > freqs[-1] + 0.5 * df or f_lo < freqs[0] - 1.5 * df:
        raise CoverageError(f"band {band_Hz} outside measured range {freqs[0]:g}..{freqs[-1]:g} Hz")
    sel = (freqs >= f_lo) & (freqs <= f_hi)
    return float(10 * np.log10(np.mean(10 ** (vals[sel] / 10))))


def two_band(low_db: float, high_db: float, knee_Hz: float = 4e9, name: str = "") -> RinProfile:
    return RinProfile(((0.0, low_db), (knee_Hz, high_db)), name=name)


# Per-mode low-band levels; both band averages stay inside the quoted ranges.
QDASH_LOW_DB = tuple(np.round(np.linspace(-129.0, -127.5, 10), 3).tolist())
QDASH_HIGH_DB = -150.0
ECL_RIN_DB = -145.0
ALL_MODES_RIN_DB = -143.0


def preset(name: str) -> RinProfile:
    """Named RIN sources: ``ecl-flat``, ``all-modes``, ``qdash-mode-1`` .. ``qdash-mode-10``, ``off``."""
    if name == "ecl-flat":
        return RinProfile.flat(ECL_RIN_DB, name=name)
    if name == "all-modes":
        return RinProfile.flat(ALL_MODES_RIN_DB, name=name)
    if name == "off":
        return RinProfile.disabled()
    if name.startswith("qdash-mode-"):
        try:
            k = int(name.rsplit("-", 1)[1])
        except ValueError:
            k = 0
        if 1 <= k <= len(QDASH_LOW_DB):
            return two_band(QDASH_LOW_DB[k - 1], QDASH_HIGH_DB, name=name)
    raise ConfigurationError(f"unknown RIN preset {name!r}")


PRESET_NAMES = ("ecl-flat", "all-modes", "off") + tuple(f"qdash-mode-{k}" for k in range(1, 11))
