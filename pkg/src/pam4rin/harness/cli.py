"""Command-line entry point: ``pam4rin {run,sweep,calibrate,psd} CONFIG``."""

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from ..errors import ConfigParseError, ConfigurationError, LinkError, StageError
from ..rxdsp import write_tap_trajectory
from . import plots
from .calibrate import ANCHOR, calibrate_power_axis
from .config import ExperimentConfig, dump_config, load_config
from .link import LinkReport, rin_probe_spectrum, run_link, transmitted_psd
from .sweep import run_sweep, summarize, write_sweep_csv

log = logging.getLogger("pam4rin")

TAP_RECORD_EVERY = 100


def _finite(x):
    return x if not isinstance(x, float) or math.isfinite(x) else str(x)


def report_dict(rep: LinkReport) -> dict:
    e = rep.errors
    return {
        "scheme": rep.scheme,
        "seed": rep.seed,
        "status": rep.status,
        "ber": _finite(rep.ber),
        "ser": _finite(rep.ser),
        "bit_errors": e.bit_errors,
        "bits_compared": e.bits_compared,
        "symbol_errors": e.symbol_errors,
        "symbols_compared": e.symbols_compared,
        "fec_pass": rep.fec_pass,
        "below_resolution": rep.below_resolution,
        "avg_rin_5g": _finite(rep.avg_rin_5g),
        "avg_rin_30g": _finite(rep.avg_rin_30g),
        "notch_hz": _finite(rep.notch_hz),
        "eq_mse": _finite(rep.eq_mse),
        "ber_estimate": _finite(rep.ber_estimate),
        "sync_peak": _finite(rep.sync_peak),
        "settle_symbols": rep.settle_symbols,
        "blocks": rep.blocks,
        "duration_s": rep.duration_s,
        "config": rep.config,
    }


def _prepare(args) -> tuple[ExperimentConfig, Path]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_channel(seed=args.seed)
    out = Path(args.out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg.with_(output_dir=str(out)), out


def cmd_run(args) -> int:
    cfg, out = _prepare(args)
    rep = run_link(cfg, record_every=TAP_RECORD_EVERY)
    (out / "report.json").write_text(json.dumps(report_dict(rep), indent=2) + "\n")
    write_tap_trajectory(out / "taps.csv", rep.trajectory, cfg.equalizer.taps)
    spectrum = rin_probe_spectrum(cfg)
    spectrum.to_csv(out / "rin.csv")
    plots.plot_taps(rep.trajectory, out / "taps.png")
    plots.plot_rin(spectrum, out / "rin.png")
    print(
        f"{rep.scheme}: status={rep.status} ber={rep.ber:.4g} bits={rep.bits_compared} "
        f"fec_pass={rep.fec_pass} notch_hz={rep.notch_hz:.4g}"
    )
    return 0


def cmd_sweep(args) -> int:
    cfg, out = _prepare(args)
    if cfg.sweep is None:
        raise ConfigurationError("sweep: config has no sweep section")
    results = run_sweep(cfg, threads=args.threads)
    write_sweep_csv(out / "sweep.csv", results)
    plots.plot_sweep(results, cfg.sweep.parameter, out / "sweep.png")
    for line in summarize(results):
        print(line)
    return 0


def cmd_calibrate(args) -> int:
    cfg, out = _prepare(args)
    trace: list = []
    channel = calibrate_power_axis(cfg, (args.target_power, args.target_ber), trace=trace)
    with open(out / "calibration.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["thermal_noise_A_per_sqrtHz", "ber_estimate"])
        for step in trace:
            w.writerow([f"{step.thermal_noise_A_per_sqrtHz:.9g}", f"{step.ber_estimate:.9g}"])
    dump_config(cfg.with_(channel=channel), out / "calibrated.yaml")
    print(f"thermal_noise_A_per_sqrtHz={channel.thermal_noise_A_per_sqrtHz:.6g}")
    return 0


def cmd_psd(args) -> int:
    cfg, out = _prepare(args)
    psd = transmitted_psd(cfg)
    psd.to_csv(out / "psd.csv")
    plots.plot_psd(psd, out / "psd.png", label=cfg.scheme, f_max=cfg.baud_Hz)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="experiment YAML file")
    common.add_argument("--seed", type=int, default=None, help="override channel.seed")
    common.add_argument("--out-dir", default=None, help="override output_dir")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="pam4rin", description="PAM4 line-coding link simulator")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="one link run").set_defaults(func=cmd_run)
    sub.add_parser("sweep", parents=[common], help="parameter sweep to CSV").set_defaults(func=cmd_sweep)
    cal = sub.add_parser("calibrate", parents=[common], help="fit thermal noise to the ECL anchor")
    cal.add_argument("--target-power", type=float, default=ANCHOR[0], help="dBm")
    cal.add_argument("--target-ber", type=float, default=ANCHOR[1])
    cal.set_defaults(func=cmd_calibrate)
    sub.add_parser("psd", parents=[common], help="transmitted spectrum CSV").set_defaults(func=cmd_psd)
    return p


def error_line(exc: BaseException) -> str:
    info: dict = {"status": "error", "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigParseError) and exc.line is not None:
        info["line"] = exc.line
    if isinstance(exc, StageError):
        info["stage"] = exc.stage
    return json.dumps(info)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print(error_line(ConfigurationError("--threads must be at least 1")), file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigurationError, OSError) as exc:
        print(error_line(exc), file=sys.stderr)
        return 2
    except LinkError as exc:
        print(error_line(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
