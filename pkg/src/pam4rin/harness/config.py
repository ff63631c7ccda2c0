"""Experiment configuration: YAML schema, defaults and validation."""

import dataclasses
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from ..channel import PRESET_NAMES, ChannelConfig, RinProfile, preset
from ..errors import ConfigParseError, ConfigurationError, StabilityError, UnknownKeyError
from ..linecode.prbs import TAPS
from ..rxdsp import DEFAULT_MU, DEFAULT_TAPS, SCHEMES, lms_stability_bound
from ..waveform import PulseShape

# Mean-square equalizer input after normalization (levels at +-1, +-3).
EQ_INPUT_POWER = 5.0
SWEEP_PARAMETERS = (
    "received_power_dBm",
    "mode",
    "rin",
    "scheme",
    "ac_coupling_cutoff_Hz",
    "thermal_noise_A_per_sqrtHz",
)


@dataclass(frozen=True)
class PrbsConfig:
    order: int = 16
    seed: int = 1


@dataclass(frozen=True)
class EqualizerConfig:
    taps: int = DEFAULT_TAPS
    mu: float = DEFAULT_MU
    settle_symbols: int = 2000


@dataclass(frozen=True)
class ReceiverConfig:
    capture_rate_Hz: float | None = 100e9
    dsp_samples_per_symbol: int = 4


@dataclass(frozen=True)
class BerConfig:
    min_errors: int = 100
    max_bits: int = 10_000_000
    block_bits: int = 2_000_000


@dataclass(frozen=True)
class SweepConfig:
    """One swept parameter; ``schemes`` repeats every point per line code."""

    parameter: str
    values: tuple
    schemes: tuple | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str = "uncoded"
    baud_Hz: float = 28e9
    prbs: PrbsConfig = PrbsConfig()
    n_payload_bits: int = 200_000
    samples_per_symbol: int = 4
    pulse: PulseShape = PulseShape()
    channel: ChannelConfig = ChannelConfig()
    rin: RinProfile = field(default_factory=lambda: preset("ecl-flat"))
    equalizer: EqualizerConfig = EqualizerConfig()
    receiver: ReceiverConfig = ReceiverConfig()
    ber: BerConfig = BerConfig()
    sweep: SweepConfig | None = None
    output_dir: str = "out"

    def __post_init__(self):
        validate(self)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def with_channel(self, **changes) -> "ExperimentConfig":
        return replace(self, channel=replace(self.channel, **changes))

    @property
    def seed(self) -> int:
        return self.channel.seed

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["rin"] = rin_to_dict(self.rin)
        if self.sweep is not None:
            d["sweep"] = {"parameter": self.sweep.parameter, "values": list(self.sweep.values)}
            if self.sweep.schemes is not None:
                d["sweep"]["schemes"] = list(self.sweep.schemes)
        return d


def rin_to_dict(profile: RinProfile):
    if profile.name in PRESET_NAMES:
        return profile.name
    out: dict[str, Any] = {"breakpoints": [list(b) for b in profile.breakpoints]}
    if math.isfinite(profile.f_max):
        out["f_max"] = profile.f_max
    return out


def validate(cfg: ExperimentConfig) -> None:
    if cfg.scheme not in SCHEMES:
        raise ConfigurationError(f"scheme: must be one of {', '.join(SCHEMES)}")
    if not cfg.baud_Hz > 0:
        raise ConfigurationError("baud_Hz: must be positive")
    if cfg.prbs.order not in TAPS:
        raise ConfigurationError(f"prbs.order: unsupported order {cfg.prbs.order}")
    if cfg.prbs.seed == 0:
        raise ConfigurationError("prbs.seed: must be nonzero")
    if cfg.n_payload_bits < 16:
        raise ConfigurationError("n_payload_bits: must be at least 16")
    if cfg.samples_per_symbol < 2:
        raise ConfigurationError("samples_per_symbol: must be at least 2")
    eq = cfg.equalizer
    if eq.taps < 1:
        raise ConfigurationError("equalizer.taps: must be positive")
    bound = lms_stability_bound(eq.taps, EQ_INPUT_POWER)
    if not 0 < eq.mu < bound:
        raise StabilityError(
            f"equalizer.mu: {eq.mu:g} outside the LMS stability bound (0, {bound:.4g}) "
            f"= 2/(taps * input power {EQ_INPUT_POWER:g})"
        )
    if eq.settle_symbols < 0:
        raise ConfigurationError("equalizer.settle_symbols: must be non-negative")
    if cfg.receiver.dsp_samples_per_symbol < 1:
        raise ConfigurationError("receiver.dsp_samples_per_symbol: must be positive")
    if cfg.ber.min_errors < 0 or cfg.ber.max_bits < cfg.n_payload_bits:
        raise ConfigurationError("ber: need min_errors >= 0 and max_bits >= n_payload_bits")
    if cfg.sweep is not None:
        if cfg.sweep.parameter not in SWEEP_PARAMETERS:
            raise ConfigurationError(f"sweep.parameter: must be one of {', '.join(SWEEP_PARAMETERS)}")
        if not cfg.sweep.values:
            raise ConfigurationError("sweep.values: must be a nonempty list")
        if cfg.sweep.schemes is not None:
            bad = [x for x in cfg.sweep.schemes if x not in SCHEMES]
            if bad or not cfg.sweep.schemes:
                raise ConfigurationError(f"sweep.schemes: must be a nonempty subset of {', '.join(SCHEMES)}")
            if cfg.sweep.parameter == "scheme":
                raise ConfigurationError("sweep.schemes: not allowed when sweeping the scheme itself")


def _build(cls, data, path: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise UnknownKeyError(f"{path}: unknown key(s) {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def parse_rin(value) -> RinProfile:
    if value is False:
        value = "off"  # YAML 1.1 reads a bare `off` as a boolean
    if isinstance(value, str):
        return preset(value)
    if isinstance(value, dict):
        if value.get("preset") is False:
            value = {**value, "preset": "off"}
        keys = set(value)
        unknown = keys - {"preset", "breakpoints", "f_max"}
        if unknown:
            raise UnknownKeyError(f"rin: unknown key(s) {', '.join(sorted(unknown))}")
        if ("preset" in keys) == ("breakpoints" in keys):
            raise ConfigurationError("rin: specify exactly one of 'preset' or 'breakpoints'")
        if "preset" in keys:
            if "f_max" in keys:
                raise ConfigurationError("rin: f_max only applies to breakpoints")
            return preset(value["preset"])
        try:
            bps = tuple((float(f), float(r)) for f, r in value["breakpoints"])
        except (TypeError, ValueError):
            raise ConfigurationError("rin.breakpoints: expected a list of [freq_Hz, rin_dB_per_Hz] pairs") from None
        return RinProfile(bps, float(value.get("f_max", math.inf)))
    raise ConfigurationError("rin: expected a preset name or a mapping")


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("top level: expected a mapping")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise UnknownKeyError(f"unknown key(s) {', '.join(unknown)}")
    if "rin" not in data:
        raise ConfigurationError("rin: a RIN source (preset name or breakpoints) is required")
    kw: dict[str, Any] = {}
    for key, value in data.items():
        if key == "prbs":
            kw[key] = _build(PrbsConfig, value, key)
        elif key == "pulse":
            kw[key] = _build(PulseShape, value, key)
        elif key == "channel":
            kw[key] = _build(ChannelConfig, value, key)
        elif key == "equalizer":
            kw[key] = _build(EqualizerConfig, value, key)
        elif key == "receiver":
            kw[key] = _build(ReceiverConfig, value, key)
        elif key == "ber":
            kw[key] = _build(BerConfig, value, key)
        elif key == "rin":
            kw[key] = parse_rin(value)
        elif key == "sweep":
            if value is None:
                continue
            if not isinstance(value, dict):
                raise ConfigurationError("sweep: expected a mapping")
            extra = set(value) - {"parameter", "values", "schemes"}
            if extra:
                raise UnknownKeyError(f"sweep: unknown key(s) {', '.join(sorted(extra))}")
            vals = value.get("values")
            if not isinstance(vals, list):
                raise ConfigurationError("sweep.values: expected a list")
            schemes = value.get("schemes")
            if schemes is not None and not isinstance(schemes, list):
                raise ConfigurationError("sweep.schemes: expected a list")
            kw[key] = SweepConfig(
                str(value.get("parameter")), tuple(vals), tuple(schemes) if schemes is not None else None
            )
        elif key in ("baud_Hz",):
            kw[key] = float(value)
        elif key in ("n_payload_bits", "samples_per_symbol"):
            kw[key] = int(value)
        else:
            kw[key] = value
    return ExperimentConfig(**kw)


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 only reads "1.0e9" as a float; also accept "28e9" and "1e-3".
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ConfigParseError(f"{path}: {exc.problem}", line) from None
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"{path}: {exc}") from None
    return config_from_dict(data or {})


def dump_config(cfg: ExperimentConfig, path) -> None:
    """Write ``cfg`` back out in the loadable YAML schema."""
    data = cfg.to_dict()
    if data.get("sweep") is None:
        data.pop("sweep", None)
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))
