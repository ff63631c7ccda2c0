"""Receiver-noise calibration and BER-versus-power helpers.

The absolute power axis of a measured link depends on receiver constants
that are not known here. Calibration pins one point instead: the thermal
noise density is bisected until the uncoded link under the flat ECL RIN
reaches the target BER at the target power.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ..channel import ChannelConfig
from ..errors import CalibrationError, ConfigurationError
from .config import ExperimentConfig
from .link import prbs_window, settle_span, simulate_block

log = logging.getLogger(__name__)

ANCHOR = (-7.0, 5e-6)
THERMAL_BRACKET = (1e-12, 200e-12)
ESTIMATE_BITS = 400_000


@dataclass(frozen=True)
class CalibrationStep:
    thermal_noise_A_per_sqrtHz: float
    ber_estimate: float


def estimate_ber(cfg: ExperimentConfig, n_bits: int = ESTIMATE_BITS) -> float:
    """Gaussian-tail BER estimate from one uncoded block.

    Deep BERs are out of reach of direct counting within a bisection loop;
    the per-level Gaussian fit to the equalized symbols is smooth in the
    noise parameters and deterministic for a fixed seed.
    """
    c = cfg.with_(scheme="uncoded")
    n = n_bits + settle_span(c)[1]
    n -= n % 2
    res = simulate_block(c, prbs_window(c.prbs.order, c.prbs.seed, 0, n), c.seed)
    if not res.sync_found:
        return 0.5
    return float(res.ber_estimate)


def _bisect_log(f, lo: float, hi: float, target: float, increasing: bool, rel_tol: float, max_iter: int, trace=None):
    """Bisect ``x`` on a log axis until ``f(x)`` is within ``rel_tol`` of ``target``."""
    f_lo, f_hi = f(lo), f(hi)
    if trace is not None:
        trace += [(lo, f_lo), (hi, f_hi)]
    below, above = (f_lo, f_hi) if increasing else (f_hi, f_lo)
    if not below <= target <= above:
        raise CalibrationError(
            f"target BER {target:g} not bracketed: f({lo:g}) = {f_lo:.3g}, f({hi:g}) = {f_hi:.3g}"
        )
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        val = f(mid)
        if trace is not None:
            trace.append((mid, val))
        if val > 0 and abs(math.log(val / target)) <= math.log1p(rel_tol):
            return mid
        if (val < target) == increasing:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(f"bisection did not converge in {max_iter} steps")


def calibrate_power_axis(
    cfg: ExperimentConfig,
    target: tuple[float, float] = ANCHOR,
    bracket: tuple[float, float] = THERMAL_BRACKET,
    rel_tol: float = 0.02,
    max_iter: int = 40,
    trace: list | None = None,
) -> ChannelConfig:
    """Channel settings whose uncoded BER at ``target[0]`` dBm is ``target[1]``.

    Only ``thermal_noise_A_per_sqrtHz`` changes. ``trace``, when given,
    receives :class:`CalibrationStep` records of every evaluation.
    """
    power, ber = target
    if cfg.rin.name != "ecl-flat":
        raise ConfigurationError("calibration requires the ecl-flat RIN preset")
    if not 0 < ber < 0.375:
        raise CalibrationError(f"target BER {ber:g} is not achievable (must lie in (0, 0.375))")
    base = cfg.with_(scheme="uncoded").with_channel(received_power_dBm=power)
    raw: list = []

    def f(th):
        return estimate_ber(base.with_channel(thermal_noise_A_per_sqrtHz=th))

    th = _bisect_log(f, bracket[0], bracket[1], ber, True, rel_tol, max_iter, raw)
    if trace is not None:
        trace.extend(CalibrationStep(x, y) for x, y in raw)
    log.info("calibrated thermal noise %.4g A/rtHz for BER %.3g at %.2f dBm", th, ber, power)
    return cfg.channel.with_(thermal_noise_A_per_sqrtHz=th)


def power_for_ber(
    cfg: ExperimentConfig,
    target_ber: float,
    bracket_dBm: tuple[float, float] = (-25.0, 5.0),
    rel_tol: float = 0.05,
    max_iter: int = 40,
) -> float:
    """Received power (dBm) at which the uncoded BER estimate equals ``target_ber``."""
    if not 0 < target_ber < 0.375:
        raise CalibrationError(f"target BER {target_ber:g} is not achievable")
    off = 100.0  # keep the log-axis bisection on positive numbers

    def f(p):
        return estimate_ber(cfg.with_channel(received_power_dBm=p - off))

    lo, hi = bracket_dBm
    return _bisect_log(f, lo + off, hi + off, target_ber, False, rel_tol, max_iter) - off


def crossing_power(powers, bers, target_ber: float) -> float:
    """Power where a BER curve crosses ``target_ber``.

    The curve is interpolated linearly in ``Q = isf(BER)`` against power
    (near-linear for Gaussian noise); beyond the measured span the two
    nearest points are extrapolated. Zero-count points are skipped.
    """
    p = np.asarray(powers, dtype=float)
    b = np.asarray(bers, dtype=float)
    keep = (b > 0) & np.isfinite(b)
    p, b = p[keep], b[keep]
    if p.size < 2:
        raise CalibrationError("need at least two points with counted errors")
    order = np.argsort(p)
    p, q = p[order], norm.isf(b[order])
    qt = norm.isf(target_ber)
    idx = np.flatnonzero(np.diff(np.sign(q - qt)) != 0)
    k = int(idx[0]) if idx.size else (0 if qt < q[0] else p.size - 2)
    p0, p1, q0, q1 = p[k], p[k + 1], q[k], q[k + 1]
    if q1 == q0:
        raise CalibrationError("flat BER curve; crossing undefined")
    return float(p0 + (qt - q0) * (p1 - p0) / (q1 - q0))
