"""Figure rendering for run and comparison reports.

Figures land next to the delimited output; they are a human-readable
view of the same data and carry no information the CSVs do not.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reporting import order_label

_DPI = 150


def _save(fig, path):
    fig.savefig(Path(path), dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def plot_density_snapshots(report, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    n = len(report.snapshots)
    shown = report.snapshots if n <= 8 else [report.snapshots[i] for i in
                                             np.linspace(0, n - 1, 8).astype(int)]
    for snap in shown:
        mask = snap.values > 0.0
        if mask.any():
            ax.loglog(snap.grid.pivots[mask], snap.values[mask], label=f"t={snap.t:g}")
    ax.set_xlabel("size x")
    ax.set_ylabel("number density f(x, t)")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    _save(fig, path)


def plot_moments(report, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    t = report.times
    for r in report.series.orders:
        ax.plot(t, report.series.column(float(r)), marker="o", ms=3, label=order_label(float(r)))
    ax.plot(t, report.xnorm, ls="--", label="xnorm")
    if np.any(report.dust_cum > 0.0):
        ax.plot(t, report.dust_cum, ls=":", label="dust (cum)")
    if np.any(report.overflow_cum > 0.0):
        ax.plot(t, report.overflow_cum, ls=":", label="overflow (cum)")
    ax.set_xlabel("t")
    ax.set_ylabel("moments")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.25)
    _save(fig, path)


def plot_gronwall(trace, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    allowed = trace.bound * (1.0 + trace.tau_disc)
    positive = trace.u > 0.0
    if positive.any():
        ax.semilogy(trace.times[positive], trace.u[positive], marker="o", ms=3, label="u(t)")
        ax.semilogy(trace.times, np.maximum(allowed, np.finfo(float).tiny),
                    ls="--", label="bound*(1+tau)")
    else:
        ax.plot(trace.times, trace.u, marker="o", ms=3, label="u(t) = 0")
        ax.plot(trace.times, allowed, ls="--", label="bound*(1+tau)")
    ax.set_xlabel("t")
    ax.set_ylabel("weighted-norm distance")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    _save(fig, path)


def plot_refinement(report, path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    n_coarse = report.levels[:-1]
    ax.loglog(n_coarse, report.distances, marker="s")
    ax.set_xlabel("coarser level n_cells")
    ax.set_ylabel("restricted L1 distance to next level")
    ax.grid(True, which="both", alpha=0.25)
    _save(fig, path)
