"""Render the panel figure and replicate boxplots to image files.

Figures accompany the delimited outputs of the experiment harness; every
number shown is also available in the CSVs, so plots are presentation only.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import RtSeries
from .experiments import Figure1Bundle, ReplicateReport

_RT_COLORS = {"naive": "tab:blue", "true": "tab:red", "corrected": "tab:cyan"}


def _plot_rt(ax, rt: RtSeries, label: str, color: str) -> None:
    times = np.arange(rt.t0, rt.t_end, dtype=float)
    values = np.where(rt.defined, rt.values, np.nan)
    ax.plot(times, values, label=label, color=color, lw=1.5)


def render_figure1(bundle: Figure1Bundle, path: str | Path, dpi: int = 150) -> Path:
    """Four panels: infections, detected cases, detected fraction, R_t curves."""
    path = Path(path)
    sim = bundle.sim
    labels = sim.infections.group_labels
    t = np.arange(sim.infections.n_times)

    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    ax = axes[0, 0]
    for l, name in enumerate(labels):
        ax.plot(t, sim.infections.counts[:, l], label=name)
    ax.set_title("daily infections")
    ax.set_xlabel("time step")
    ax.legend()

    ax = axes[0, 1]
    for l, name in enumerate(labels):
        ax.plot(t, sim.symptomatics.counts[:, l], label=name)
    ax.set_title("daily detected cases")
    ax.set_xlabel("time step")
    ax.legend()

    ax = axes[1, 0]
    frac = np.where(bundle.fraction_defined, bundle.fraction, np.nan)
    ax.plot(t, frac, color="black")
    ax.set_title("detected fraction")
    ax.set_xlabel("time step")
    ax.set_ylim(0, 1)

    ax = axes[1, 1]
    _plot_rt(ax, bundle.rt_naive, "detected only", _RT_COLORS["naive"])
    _plot_rt(ax, bundle.rt_true, "all cases", _RT_COLORS["true"])
    _plot_rt(ax, bundle.rt_corrected, "corrected", _RT_COLORS["corrected"])
    ax.axhline(1.0, color="grey", lw=0.8, ls="--")
    if bundle.window is not None:
        ax.axvspan(bundle.window[0], bundle.window[1], color="grey", alpha=0.15)
    ax.set_title("estimated R_t")
    ax.set_xlabel("time step")
    ax.legend()

    fig.suptitle(f"scenario {bundle.scenario} (seed {bundle.config.rng_seed})")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path


def render_replicate_boxplots(
    report: ReplicateReport, path: str | Path, dpi: int = 150
) -> Path:
    """Boxplots of pooled per-time estimate-minus-reference differences."""
    path = Path(path)
    naive = np.concatenate([s.naive.diffs for s in report.summaries])
    corrected = np.concatenate([s.corrected.diffs for s in report.summaries])

    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    ax.boxplot(
        [naive, corrected],
        tick_labels=["detected only", "corrected"],
        showfliers=True,
    )
    ax.axhline(0.0, color="grey", lw=0.8, ls="--")
    ax.set_ylabel("R_t error vs all-cases estimate")
    ax.set_title(
        f"scenario {report.scenario}: errors over {report.n_replicates} replicates"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
