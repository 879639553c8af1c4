"""SVG figures for sweeps and PSD comparisons.

Output is byte-deterministic: the SVG id salt is fixed and the date
metadata is suppressed, so the same table always renders to the same file.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "ambientid",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "figure.figsize": (5.5, 3.6),
}

METHOD_COLORS = {"ce": "tab:blue", "qn": "tab:orange"}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def sweep_figure(param: str, rows: list[dict], true_value: float, path) -> Path:
    """Mean estimate vs SNR with a +-std band per method and the true value.

    ``rows`` are summary records with keys ``snr, method, param, mean, std``.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        methods = sorted({r["method"] for r in rows if r["param"] == param})
        for method in methods:
            sel = sorted((r for r in rows if r["param"] == param and r["method"] == method),
                         key=lambda r: r["snr"])
            snr = np.array([r["snr"] for r in sel])
            mean = np.array([r["mean"] for r in sel])
            std = np.nan_to_num(np.array([r["std"] for r in sel]))
            color = METHOD_COLORS.get(method)
            ax.plot(snr, mean, "o-", color=color, label=method.upper())
            ax.fill_between(snr, mean - std, mean + std, color=color, alpha=0.2, linewidth=0)
        ax.axhline(true_value, color="k", linestyle="--", linewidth=1, label="true")
        ax.set_xlabel("SNR")
        ax.set_ylabel(f"{param} estimate")
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)


def psd_figure(omega, measured, predicted, title: str, path) -> Path:
    """Measured and predicted PSD on a log-scale y axis."""
    omega = np.asarray(omega, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(omega, measured, "-", marker="." if omega.shape[0] == 1 else None,
                color="0.4", linewidth=0.8, label="measured")
        ax.plot(omega, predicted, "-", marker="." if omega.shape[0] == 1 else None,
                color="tab:red", linewidth=1.0, label="predicted")
        ax.set_yscale("log")
        ax.set_xlabel("angular frequency [rad/s]")
        ax.set_ylabel("PSD")
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)
