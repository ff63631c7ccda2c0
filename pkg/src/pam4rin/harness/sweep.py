"""Parameter sweeps over independent link runs, with CSV emission."""

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..channel import preset
from ..errors import ConfigurationError
from .config import ExperimentConfig
from .link import LinkReport, run_link

log = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "sweep_value",
    "scheme",
    "ber",
    "ser",
    "bits_compared",
    "fec_pass",
    "avg_rin_5g",
    "avg_rin_30g",
    "notch_hz",
)


@dataclass(frozen=True)
class SweepPoint:
    index: int
    value: object
    config: ExperimentConfig


def apply_value(cfg: ExperimentConfig, parameter: str, value) -> ExperimentConfig:
    """``cfg`` with one swept parameter set to ``value``."""
    try:
        if parameter == "received_power_dBm":
            return cfg.with_channel(received_power_dBm=float(value))
        if parameter == "ac_coupling_cutoff_Hz":
            return cfg.with_channel(ac_coupling_cutoff_Hz=float(value))
        if parameter == "thermal_noise_A_per_sqrtHz":
            return cfg.with_channel(thermal_noise_A_per_sqrtHz=float(value))
        if parameter == "mode":
            return cfg.with_(rin=preset(f"qdash-mode-{int(value)}"))
        if parameter == "rin":
            return cfg.with_(rin=preset(str(value)))
        if parameter == "scheme":
            return cfg.with_(scheme=str(value))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"sweep value {value!r} invalid for {parameter}: {exc}") from None
    raise ConfigurationError(f"sweep.parameter: unknown parameter {parameter!r}")


def expand(cfg: ExperimentConfig) -> list[SweepPoint]:
    """All sweep points in output order.

    Point ``i`` of the value list runs with channel seed ``seed + i``; when
    several schemes are swept at each value they share that seed.
    """
    if cfg.sweep is None:
        raise ConfigurationError("sweep: config has no sweep section")
    if not cfg.sweep.values:
        raise ConfigurationError("sweep.values: must be a nonempty list")
    schemes = cfg.sweep.schemes or (cfg.scheme,)
    points = []
    for i, value in enumerate(cfg.sweep.values):
        base = apply_value(cfg, cfg.sweep.parameter, value).with_channel(seed=cfg.seed + i)
        for scheme in schemes if cfg.sweep.parameter != "scheme" else (base.scheme,):
            points.append(SweepPoint(i, value, base.with_(scheme=scheme, sweep=None)))
    return points


def _run_point(point: SweepPoint) -> LinkReport:
    return run_link(point.config)


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[tuple[SweepPoint, LinkReport]]:
    """Run every point; results come back in point order regardless of ``threads``."""
    points = expand(cfg)
    if threads > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(points))) as pool:
            reports = list(pool.map(_run_point, points))
    else:
        reports = [_run_point(p) for p in points]
    return list(zip(points, reports))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.9g}"
    return str(x)


def sweep_row(point: SweepPoint, report: LinkReport) -> list[str]:
    return [
        _fmt(point.value),
        report.scheme,
        _fmt(float(report.ber)),
        _fmt(float(report.ser)),
        _fmt(int(report.bits_compared)),
        _fmt(bool(report.fec_pass)),
        _fmt(float(report.avg_rin_5g)),
        _fmt(float(report.avg_rin_30g)),
        _fmt(float(report.notch_hz)),
    ]


def write_sweep_csv(path, results) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for point, report in results:
            w.writerow(sweep_row(point, report))


def summarize(results) -> list[str]:
    """One line per scheme: points, FEC passes and the BER span."""
    lines = []
    by_scheme: dict[str, list[LinkReport]] = {}
    for _, rep in results:
        by_scheme.setdefault(rep.scheme, []).append(rep)
    for scheme, reps in by_scheme.items():
        bers = [r.ber for r in reps if r.status == "ok"]
        n_fec = sum(r.fec_pass for r in reps if r.status == "ok")
        failed = sum(r.status != "ok" for r in reps)
        span = f"ber {min(bers):.3g}..{max(bers):.3g}" if bers else "no valid points"
        low = sum(r.below_resolution for r in reps)
        lines.append(
            f"{scheme}: {len(reps)} points, {n_fec} below FEC threshold, {span}, "
            f"{low} below resolution, {failed} sync failures"
        )
    return lines
