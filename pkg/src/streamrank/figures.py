"""Render the evaluation report as figure files next to the CSV output."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import MetricReport

plt.rcParams.update(
    {
        "figure.figsize": (8.0, 4.5),
        "figure.dpi": 110,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "font.size": 9,
    }
)


def _combo_labels(reports: list[MetricReport]) -> list[str]:
    return [f"{r.method}\nx {r.detector}" for r in reports]


def _grouped_bars(ax, reports, fields, title):
    labels = _combo_labels(reports)
    x = np.arange(len(reports))
    width = 0.8 / max(len(fields), 1)
    for j, (name, getter) in enumerate(fields):
        vals = [getter(r) for r in reports]
        heights = [v if v is not None else 0.0 for v in vals]
        bars = ax.bar(x + j * width, heights, width, label=name)
        for bar, v in zip(bars, vals):
            if v is None:
                ax.text(bar.get_x() + bar.get_width() / 2, 0.02, "n/a", ha="center", fontsize=7, rotation=90)
    ax.set_xticks(x + width * (len(fields) - 1) / 2)
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_title(title)
    ax.legend(fontsize=7)


def render_report_figures(reports: list[MetricReport], outdir, prefix: str = "metrics") -> list[str]:
    """Write binary-metric, ranking-metric, and ties/timing figures; returns paths."""
    outdir = os.fspath(outdir)
    os.makedirs(outdir, exist_ok=True)
    ok = [r for r in reports if r.error is None]
    paths = []
    if not ok:
        return paths

    fig, ax = plt.subplots()
    _grouped_bars(
        ax,
        ok,
        [
            ("accuracy", lambda r: r.accuracy),
            ("f1", lambda r: r.f1),
            ("roc_auc", lambda r: r.roc_auc),
        ],
        "Binary metrics (top-k positives; higher is better)",
    )
    ax.set_ylim(0, 1.05)
    path = os.path.join(outdir, f"{prefix}_binary.png")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    paths.append(path)

    fig, (ax1, ax2) = plt.subplots(1, 2)
    _grouped_bars(ax1, ok, [("swap corr", lambda r: r.swap_corr)], "Swap correlation (higher is better)")
    ax1.set_ylim(-1.05, 1.05)
    _grouped_bars(ax2, ok, [("hamming", lambda r: r.hamming)], "Hamming distance (lower is better)")
    path = os.path.join(outdir, f"{prefix}_ranking.png")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    paths.append(path)

    fig, (ax1, ax2) = plt.subplots(1, 2)
    labels = _combo_labels(ok)
    x = np.arange(len(ok))
    ties = [r.ties if r.ties is not None else 0 for r in ok]
    ax1.bar(x, ties, color="#a55")
    ax1.set_yscale("symlog")
    ax1.set_xticks(x)
    ax1.set_xticklabels(labels, fontsize=7)
    ax1.set_title("Maximally tied points (lower is better)")
    have_timing = any(r.phi_seconds is not None or r.rank_seconds is not None for r in ok)
    if have_timing:
        phi = [r.phi_seconds or 0.0 for r in ok]
        rank = [r.rank_seconds or 0.0 for r in ok]
        ax2.bar(x, phi, 0.4, label="generate phi")
        ax2.bar(x + 0.4, rank, 0.4, label="rank")
        ax2.set_xticks(x + 0.2)
        ax2.set_xticklabels(labels, fontsize=7)
        ax2.set_title("Median seconds")
        ax2.legend(fontsize=7)
    else:
        ax2.axis("off")
        ax2.set_title("timing disabled")
    path = os.path.join(outdir, f"{prefix}_ties_timing.png")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    paths.append(path)
    return paths
