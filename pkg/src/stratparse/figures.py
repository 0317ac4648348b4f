"""Render report figures next to the delimited tables."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def compression_figure(stats, path):
    """Mean layer compression ratio by layer length; dot size follows the
    number of observed layers of that length."""
    fig, ax = plt.subplots(figsize=(6, 4))
    rows = stats.rows()
    if rows:
        lengths = [r[0] for r in rows]
        means = [r[1] for r in rows]
        stds = [r[2] for r in rows]
        counts = np.array([r[3] for r in rows], dtype=float)
        sizes = 10 + 90 * counts / counts.max()
        ax.errorbar(lengths, means, yerr=stds, fmt="none", ecolor="0.8", zorder=1)
        ax.scatter(lengths, means, s=sizes, color="tab:blue", zorder=2)
        ax.axhline(stats.mean, color="tab:red", linestyle="--",
                   label=f"mean {stats.mean:.2f}")
        ax.legend()
    ax.set_xlabel("layer length")
    ax.set_ylabel("compression ratio")
    ax.set_ylim(0.0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def complexity_figure(points, fit, path):
    """Stratified node totals against sentence length, with the fitted
    a2*n^2 + a1*n curve and the triangular n(n+1)/2 reference."""
    a2, a1 = fit
    fig, ax = plt.subplots(figsize=(6, 4))
    lengths = np.array([p[0] for p in points], dtype=float)
    counts = np.array([p[1] for p in points], dtype=float)
    ax.scatter(lengths, counts, s=8, alpha=0.4, label="sentences")
    grid = np.linspace(1, lengths.max(), 200)
    ax.plot(grid, a2 * grid ** 2 + a1 * grid, color="tab:red",
            label=f"fit {a2:.3f}n² + {a1:.2f}n")
    ax.plot(grid, grid * (grid + 1) / 2, color="0.5", linestyle=":",
            label="triangular n(n+1)/2")
    ax.set_xlabel("sentence length")
    ax.set_ylabel("stratified nodes")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def orientation_figure(counts_by_factor, path):
    """Left/right orientation frequencies per binarization factor."""
    fig, ax = plt.subplots(figsize=(6, 4))
    factors = list(counts_by_factor)
    lefts = [counts_by_factor[f][0] for f in factors]
    rights = [counts_by_factor[f][1] for f in factors]
    xs = np.arange(len(factors))
    ax.bar(xs - 0.2, lefts, width=0.4, label="left-pointing")
    ax.bar(xs + 0.2, rights, width=0.4, label="right-pointing")
    ax.set_xticks(xs, [f.value for f in factors])
    ax.set_ylabel("orientation count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def heads_figure(rows, path, top_parents=8):
    """Stacked head-child counts for the most frequent parent labels."""
    totals = {}
    for parent, _, count in rows:
        totals[parent] = totals.get(parent, 0) + count
    parents = sorted(totals, key=totals.get, reverse=True)[:top_parents]
    fig, ax = plt.subplots(figsize=(7, 4))
    bottoms = {p: 0 for p in parents}
    for parent, head, count in rows:
        if parent not in bottoms:
            continue
        x = parents.index(parent)
        ax.bar(x, count, bottom=bottoms[parent], width=0.6)
        if count >= 0.08 * totals[parent]:
            ax.text(x, bottoms[parent] + count / 2, head,
                    ha="center", va="center", fontsize=7)
        bottoms[parent] += count
    ax.set_xticks(range(len(parents)), parents)
    ax.set_ylabel("head selections")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def training_figure(history, path):
    """Loss components and dev F1 over epochs."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    epochs = [row.epoch for row in history]
    for key in ("loss_tag", "loss_label", "loss_signal", "loss_total"):
        ax1.plot(epochs, [getattr(row, key) for row in history],
                 label=key.replace("loss_", ""))
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("loss")
    ax1.legend()
    with_f1 = [(row.epoch, row.dev_f1) for row in history
               if row.dev_f1 == row.dev_f1]
    if with_f1:
        ax2.plot([e for e, _ in with_f1], [f for _, f in with_f1],
                 color="tab:green")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("dev F1")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
