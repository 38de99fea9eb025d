"""Static SVG figure emission.

Figures are rendered with the Agg backend and written atomically. Output
is byte-stable for fixed input: the SVG id hash salt is pinned and the
date metadata is suppressed.
"""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ValidationError
from .traceio import atomic_write_bytes

PS = 1e-12

_RC = {
    "svg.hashsalt": "spinfid",
    "figure.figsize": (6.4, 4.0),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path: Path) -> None:
    buffer = io.BytesIO()
    fig.savefig(buffer, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    atomic_write_bytes(Path(path), buffer.getvalue())


def plot_trace(trace, path: Path, fit=None, title: str = "") -> None:
    """One panel: trace samples with an optional fit-curve overlay."""

    if len(trace) == 0:
        raise ValidationError("cannot plot an empty trace")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        t_ps = trace.times / PS
        ax.plot(t_ps, trace.values, ".", ms=3, color="#1f77b4", label="data")
        if fit is not None:
            dense = np.linspace(trace.times[0], trace.times[-1], 4 * len(trace))
            window = (dense >= fit.fit_window[0]) & (dense <= fit.fit_window[1])
            ax.plot(
                dense[window] / PS,
                fit.model_values(dense[window]),
                "-",
                color="black",
                lw=1.2,
                label="fit",
            )
        ax.set_xlabel("pump-probe delay (ps)")
        ax.set_ylabel("signal (arb. u.)")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right")
        _save(fig, path)


def plot_trace_overlay(traces, labels, path: Path, fits=None, title: str = "") -> None:
    """Stacked overlay of several traces with their fits and a legend."""

    if not traces:
        raise ValidationError("cannot plot an empty sweep")
    for trace in traces:
        if len(trace) == 0:
            raise ValidationError("cannot plot an empty trace")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        offset = 0.0
        step = 1.5 * max(float(np.max(np.abs(tr.values))) for tr in traces)
        colors = plt.cm.viridis(np.linspace(0.0, 0.85, len(traces)))
        for k, trace in enumerate(traces):
            ax.plot(trace.times / PS, trace.values + offset, ".", ms=2,
                    color=colors[k], label=labels[k])
            if fits is not None:
                fit = fits[k]
                dense = np.linspace(trace.times[0], trace.times[-1], 4 * len(trace))
                window = (dense >= fit.fit_window[0]) & (dense <= fit.fit_window[1])
                ax.plot(dense[window] / PS, fit.model_values(dense[window]) + offset,
                        "-", color="black", lw=0.9)
            offset += step
        ax.set_xlabel("pump-probe delay (ps)")
        ax.set_ylabel("signal (arb. u., offset)")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right", fontsize=7)
        _save(fig, path)


def plot_regression(x, y, yerr, line_x, line_y, xlabel, ylabel, path: Path, title: str = "") -> None:
    """Scatter with error bars plus a regression or extrapolation line."""

    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValidationError("cannot plot an empty series")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.errorbar(x, y, yerr=yerr, fmt="o", ms=4, capsize=2, color="#1f77b4", label="points")
        ax.plot(line_x, line_y, "-", color="black", lw=1.2, label="fit")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        _save(fig, path)


def plot_relaxation_loglog(temps, times, sigmas, line_temps, line_times, target, predicted,
                           path: Path, title: str = "") -> None:
    """Relaxation times against temperature on log-log axes with the
    extrapolation line and the predicted target point."""

    temps = np.asarray(temps, dtype=float)
    if temps.size == 0:
        raise ValidationError("cannot plot an empty series")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.errorbar(temps, times / PS, yerr=None if sigmas is None else sigmas / PS,
                    fmt="o", ms=4, capsize=2, color="#1f77b4", label="measured")
        ax.plot(line_temps, line_times / PS, "--", color="black", lw=1.0, label="extrapolation")
        ax.plot([target], [predicted / PS], "*", ms=10, color="#d62728", label="prediction")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("temperature (K)")
        ax.set_ylabel("relaxation time (ps)")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        _save(fig, path)
