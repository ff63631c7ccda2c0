"""End-to-end link runs: payload -> line code -> channel -> DSP -> error count."""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import linecode
from ..channel import (
    apply_channel,
    average_rin,
    measure_rin,
    mzm_modulate,
    predistort,
    synthesize_rin_noise,
)
from ..errors import LinkError, StageError
from ..rxdsp import (
    EqualizerState,
    ErrorReport,
    SyncResult,
    count_errors,
    dd_lms_equalize,
    decode_chain,
    frame_sync,
    gaussian_ber_estimate,
    line_symbols_per_frame,
    payload_bits_per_line_symbol,
)
from ..waveform import Waveform, normalize, notch_width, resample, synthesize, welch_psd
from .config import EQ_INPUT_POWER, ExperimentConfig

log = logging.getLogger(__name__)

TRAINING_LENGTH = 32
GUARD_SYMBOLS = 256
# Training search window around its nominal position, in symbols. The
# receive chain delays the frame by a few symbols at most.
SYNC_EARLY = 8
SYNC_LATE = 56
RIN_PROBE_SAMPLES = 1 << 19
RIN_BANDS = ((0.0, 5e9), (0.0, 30e9))


def _training_sequence() -> np.ndarray:
    return linecode.pam4_map(linecode.prbs_generate(7, 0x5B, 2 * TRAINING_LENGTH))


TRAINING = _training_sequence()


def _guard(n: int, seed: int) -> np.ndarray:
    return linecode.pam4_map(linecode.prbs_generate(9, seed, 2 * n))


def prbs_window(order: int, seed: int, start: int, length: int) -> np.ndarray:
    """Bits ``start .. start+length`` of the (periodic) PRBS."""
    period = (1 << order) - 1
    if period <= start + length:
        base = linecode.prbs_generate(order, seed, min(period, start + length))
        idx = (start + np.arange(length)) % base.size
        return base[idx]
    return linecode.prbs_generate(order, seed, start + length)[start:]


def frame_bits(scheme: str) -> int:
    """Payload bits per decodable line frame."""
    return {"uncoded": 2, "8b10b": 16, "manchester": 2}[scheme]


def encode_payload(bits: np.ndarray, scheme: str) -> np.ndarray:
    if scheme == "uncoded":
        return linecode.pam4_map(bits)
    if scheme == "8b10b":
        return linecode.encode_8b10b_pam4(bits)
    return linecode.encode_manchester_pam4(linecode.pam4_map(bits))


def settle_span(cfg: ExperimentConfig) -> tuple[int, int]:
    """Equalizer settling window as (line symbols, payload bits), frame aligned."""
    fs = line_symbols_per_frame(cfg.scheme)
    sym = -(-cfg.equalizer.settle_symbols // fs) * fs
    return sym, int(round(sym * payload_bits_per_line_symbol(cfg.scheme)))


def block_seed(seed: int, block: int) -> int:
    """Independent per-block noise seed from a base seed and a counter."""
    return int(np.random.SeedSequence([seed, block]).generate_state(1)[0])


@dataclass
class BlockResult:
    errors: ErrorReport
    sync_peak: float
    sync_found: bool
    eq_mse: float
    ber_estimate: float
    soft: np.ndarray = field(repr=False)
    line: np.ndarray = field(repr=False)
    taps: np.ndarray = field(repr=False)
    trajectory: np.ndarray = field(repr=False, default_factory=lambda: np.empty((0, 0)))


@dataclass
class LinkReport:
    scheme: str
    seed: int
    status: str
    errors: ErrorReport
    avg_rin_5g: float
    avg_rin_30g: float
    notch_hz: float
    eq_mse: float
    ber_estimate: float
    sync_peak: float
    settle_symbols: int
    blocks: int
    duration_s: float
    min_errors: int = 100
    config: dict = field(repr=False, default_factory=dict)
    trajectory: np.ndarray = field(repr=False, default_factory=lambda: np.empty((0, 0)))

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def ber(self) -> float:
        return self.errors.ber if self.ok else math.nan

    @property
    def ser(self) -> float:
        return self.errors.ser if self.ok else math.nan

    @property
    def fec_pass(self) -> bool:
        return self.ok and self.errors.fec_pass

    @property
    def bits_compared(self) -> int:
        return self.errors.bits_compared

    @property
    def below_resolution(self) -> bool:
        """Fewer errors were counted than the configured minimum."""
        return self.errors.bit_errors < self.min_errors


def transmit_symbols(cfg: ExperimentConfig, payload: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Full line-symbol frame: guard, training, coded payload, guard.

    Returns ``(frame, coded_payload, training_start)``.
    """
    line = encode_payload(payload, cfg.scheme)
    pre = _guard(GUARD_SYMBOLS, 0x11)
    post = _guard(GUARD_SYMBOLS, 0x1F3)
    frame = np.concatenate([pre, TRAINING, line, post])
    return frame, line, pre.size


def optical_transmit(cfg: ExperimentConfig, frame: np.ndarray) -> Waveform:
    x = synthesize(frame / 3.0, cfg.baud_Hz, cfg.samples_per_symbol, cfg.pulse)
    return mzm_modulate(predistort(x, cfg.channel.mod_index), 1.0)


def receive(cfg: ExperimentConfig, current: Waveform) -> Waveform:
    """Capture resampling, rate conversion to the DSP rate, normalization.

    The output is scaled so that the ideal PAM4 levels sit at +-1, +-3.
    """
    w = current
    if cfg.receiver.capture_rate_Hz:
        w = resample(w, cfg.receiver.capture_rate_Hz)
    w = resample(w, cfg.baud_Hz * cfg.receiver.dsp_samples_per_symbol)
    w = normalize(w)
    return Waveform(w.samples * math.sqrt(EQ_INPUT_POWER), w.sample_rate)


def symbol_timing(cfg: ExperimentConfig, rx: Waveform, nominal: int):
    """Pick the sampling phase whose symbol-rate stream best matches the training.

    Offsets are searched in ``[nominal - SYNC_EARLY, nominal + SYNC_LATE)``.
    """
    os_ = cfg.receiver.dsp_samples_per_symbol
    lo = max(0, nominal - SYNC_EARLY)
    best = None
    for phase in range(os_):
        sub = rx.samples[phase::os_]
        sync = frame_sync(sub[lo:], TRAINING, search=nominal + SYNC_LATE - lo)
        if best is None or sync.correlation_peak > best[1].correlation_peak:
            best = (sub, SyncResult(sync.sample_offset + lo, sync.correlation_peak, sync.found))
    return best


def simulate_block(cfg: ExperimentConfig, payload: np.ndarray, seed: int, record_every: int = 0) -> BlockResult:
    scheme = cfg.scheme
    frame, line, t0 = transmit_symbols(cfg, payload)
    stage = "transmitter"
    try:
        optical = optical_transmit(cfg, frame)
        stage = "channel"
        current = apply_channel(optical, cfg.rin, cfg.channel.with_(seed=seed))
        stage = "receiver"
        rx = receive(cfg, current)
        stage = "frame_sync"
        sub, sync = symbol_timing(cfg, rx, t0)
    except LinkError as exc:
        raise StageError(stage, exc) from exc

    n_line = line.size
    empty = ErrorReport(0, 0, 0, 0)
    if not sync.found:
        return BlockResult(empty, sync.correlation_peak, False, math.nan, math.nan, np.empty(0), line, np.empty(0))

    eq_cfg = cfg.equalizer
    state = EqualizerState(n_taps=eq_cfg.taps, mu=eq_cfg.mu, input_power=EQ_INPUT_POWER)
    try:
        res = dd_lms_equalize(
            sub, state, TRAINING, start=sync.sample_offset, n_out=TRAINING_LENGTH + n_line, record_every=record_every
        )
    except LinkError as exc:
        raise StageError("equalizer", exc) from exc
    soft = res.soft[TRAINING_LENGTH:]

    decoded = decode_chain(soft, scheme)
    settle_sym, settle_bits = settle_span(cfg)
    settle_bits = min(settle_bits, payload.size)
    errors = count_errors(payload[settle_bits:], decoded[settle_bits:])
    tail = slice(settle_sym, None)
    mse = float(np.mean((soft[tail] - line[tail]) ** 2)) if n_line > settle_sym else math.nan
    est = gaussian_ber_estimate(soft[tail], line[tail]) if n_line > settle_sym else math.nan
    return BlockResult(errors, sync.correlation_peak, True, mse, est, soft, line, res.state.taps, res.trajectory)


def rin_probe_spectrum(cfg: ExperimentConfig):
    """RIN measured on an unmodulated carrier carrying the configured RIN."""
    fs = max(cfg.baud_Hz * cfg.samples_per_symbol, 2.2 * RIN_BANDS[-1][1])
    m = synthesize_rin_noise(cfg.rin, RIN_PROBE_SAMPLES, fs, block_seed(cfg.seed, 0xFFFF))
    return measure_rin(Waveform(1.0 + m, fs))


def measured_band_rin(cfg: ExperimentConfig, spectrum=None) -> tuple[float, float]:
    """Band-averaged measured RIN over ``RIN_BANDS``.

    With RIN disabled this is the estimator floor, a large finite negative number.
    """
    spec = spectrum if spectrum is not None else rin_probe_spectrum(cfg)
    return tuple(average_rin(spec, band) for band in RIN_BANDS)


def transmitted_psd(cfg: ExperimentConfig, n_payload_bits: int | None = None):
    n = _round_bits(n_payload_bits or cfg.n_payload_bits, cfg.scheme)
    payload = prbs_window(cfg.prbs.order, cfg.prbs.seed, 0, n)
    line = encode_payload(payload, cfg.scheme)
    return welch_psd(synthesize(line, cfg.baud_Hz, cfg.samples_per_symbol, cfg.pulse))


def _round_bits(n: int, scheme: str) -> int:
    step = frame_bits(scheme)
    return max(step, (int(n) // step) * step)


def run_link(cfg: ExperimentConfig, measure_extras: bool = True, record_every: int = 0) -> LinkReport:
    """Run blocks until ``ber.min_errors`` errors or ``ber.max_bits`` bits are counted.

    ``record_every > 0`` keeps the first block's equalizer tap trajectory.
    """
    t_start = time.perf_counter()
    total = ErrorReport(0, 0, 0, 0)
    mses, ests, peaks = [], [], []
    offset = 0
    block = 0
    trajectory = np.empty((0, 0))
    settle_bits = settle_span(cfg)[1]
    n_next = _round_bits(cfg.n_payload_bits + settle_bits, cfg.scheme)
    status = "ok"
    while True:
        payload = prbs_window(cfg.prbs.order, cfg.prbs.seed, offset, n_next)
        res = simulate_block(cfg, payload, block_seed(cfg.seed, block), record_every if block == 0 else 0)
        if block == 0:
            trajectory = res.trajectory
        block += 1
        offset += n_next
        peaks.append(res.sync_peak)
        if not res.sync_found:
            status = "sync-failed"
            break
        if res.errors.bits_compared == 0:
            break
        total = total + res.errors
        mses.append(res.eq_mse)
        ests.append(res.ber_estimate)
        if total.bit_errors >= cfg.ber.min_errors or total.bits_compared >= cfg.ber.max_bits:
            break
        remaining = cfg.ber.max_bits - total.bits_compared
        if total.bit_errors > 0:
            want = cfg.ber.min_errors / total.ber - total.bits_compared
        else:
            want = 4 * total.bits_compared
        n_next = min(max(want * 1.1, cfg.n_payload_bits), remaining, cfg.ber.block_bits)
        n_next = _round_bits(n_next + settle_bits, cfg.scheme)
        log.debug("block %d: %s errors so far, next %d bits", block, total.bit_errors, n_next)

    if measure_extras:
        rin5, rin30 = measured_band_rin(cfg)
        notch = notch_width(transmitted_psd(cfg), cfg.baud_Hz)
    else:
        rin5 = rin30 = notch = math.nan
    report = LinkReport(
        scheme=cfg.scheme,
        seed=cfg.seed,
        status=status,
        errors=total,
        avg_rin_5g=rin5,
        avg_rin_30g=rin30,
        notch_hz=notch,
        eq_mse=float(np.mean(mses)) if mses else math.nan,
        ber_estimate=float(np.mean(ests)) if ests else math.nan,
        sync_peak=float(min(peaks)),
        settle_symbols=cfg.equalizer.settle_symbols,
        blocks=block,
        duration_s=time.perf_counter() - t_start,
        min_errors=cfg.ber.min_errors,
        config=cfg.to_dict(),
        trajectory=trajectory,
    )
    return report
