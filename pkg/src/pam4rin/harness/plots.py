"""Static figures written next to the CSV outputs."""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..rxdsp import FEC_THRESHOLD  # noqa: E402

golden_mean = (math.sqrt(5) - 1.0) / 2.0
fig_width = 5.0

params = {
    "figure.figsize": (fig_width, fig_width * golden_mean),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.labelsize": 10,
    "font.size": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
}

SCHEME_STYLE = {
    "uncoded": dict(color="#2b8cbe", marker="o"),
    "8b10b": dict(color="#e6550d", marker="s"),
    "manchester": dict(color="#31a354", marker="^"),
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_psd(psd, path, label: str = "", f_max: float | None = None) -> Path:
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        f = psd.freqs / 1e9
        ax.plot(f, psd.db(), label=label or None)
        if f_max is not None:
            ax.set_xlim(0, f_max / 1e9)
        ax.set_xlabel("Frequency (GHz)")
        ax.set_ylabel("PSD (dB/Hz)")
        if label:
            ax.legend()
        return _save(fig, path)


def plot_rin(spectrum, path, f_max: float = 30e9) -> Path:
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        sel = spectrum.freqs <= f_max
        ax.plot(spectrum.freqs[sel] / 1e9, spectrum.rin_db_per_hz[sel])
        ax.set_xlabel("Frequency (GHz)")
        ax.set_ylabel("RIN (dB/Hz)")
        return _save(fig, path)


def plot_taps(trajectory, path) -> Path:
    traj = np.asarray(trajectory)
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        if traj.size:
            for j in range(1, traj.shape[1]):
                ax.plot(traj[:, 0], traj[:, j], lw=0.8)
        ax.set_xlabel("Symbol index")
        ax.set_ylabel("Tap weight")
        return _save(fig, path)


def plot_sweep(results, parameter: str, path) -> Path:
    """BER against the swept value, one trace per scheme, FEC threshold marked."""
    numeric = parameter not in ("rin", "scheme")
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        by_scheme: dict[str, list] = {}
        labels: list = []
        for point, rep in results:
            if point.value not in labels:
                labels.append(point.value)
            by_scheme.setdefault(rep.scheme, []).append((point.value, rep.ber))
        for scheme, pts in by_scheme.items():
            x = [float(v) if numeric else labels.index(v) for v, _ in pts]
            y = np.array([b for _, b in pts], dtype=float)
            y[y <= 0] = np.nan
            ax.semilogy(x, y, label=scheme, **SCHEME_STYLE.get(scheme, {}))
        ax.axhline(FEC_THRESHOLD, color="k", ls="--", lw=0.8, label="FEC threshold")
        if not numeric:
            ax.set_xticks(range(len(labels)))
            ax.set_xticklabels([str(v) for v in labels], rotation=30, ha="right")
        ax.set_xlabel(parameter)
        ax.set_ylabel("BER")
        ax.legend()
        return _save(fig, path)
