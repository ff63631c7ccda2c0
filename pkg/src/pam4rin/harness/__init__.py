"""Experiment orchestration: configuration, link runs, sweeps, calibration, CLI."""

from .calibrate import calibrate_power_axis, crossing_power, estimate_ber, power_for_ber
from .config import (
    BerConfig,
    EqualizerConfig,
    ExperimentConfig,
    PrbsConfig,
    ReceiverConfig,
    SweepConfig,
    config_from_dict,
    dump_config,
    load_config,
)
from .link import LinkReport, run_link, simulate_block, transmitted_psd
from .sweep import run_sweep, write_sweep_csv

__all__ = [
    "BerConfig",
    "EqualizerConfig",
    "ExperimentConfig",
    "LinkReport",
    "PrbsConfig",
    "ReceiverConfig",
    "SweepConfig",
    "calibrate_power_axis",
    "config_from_dict",
    "crossing_power",
    "dump_config",
    "estimate_ber",
    "load_config",
    "power_for_ber",
    "run_link",
    "run_sweep",
    "simulate_block",
    "transmitted_psd",
    "write_sweep_csv",
]
