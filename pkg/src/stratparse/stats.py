"""Corpus statistics over stratified samples: orientation frequencies,
layer compression ratios, node-budget bounds, and empirical complexity fits.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .stratify import ORIENT_RIGHT


def orientation_stats(samples):
    """Total (left, right) orientation counts over all layers and sentences.

    Counts follow pointing direction: left = 0 values, right = 1 values.
    """
    left = right = 0
    for sample in samples:
        if sample.orientations is None:
            raise ValueError("orientation stats need binary-mode samples")
        for layer in sample.orientations:
            ones = sum(layer)
            right += ones
            left += len(layer) - ones
    assert ORIENT_RIGHT == 1
    return left, right


@dataclass
class CompressionStats:
    """Layer compression ratios C = n_{j+1}/n_j grouped by layer length."""

    per_length: dict  # layer length -> (mean, std, count)
    mean: float
    std: float
    count: int

    def rows(self):
        """(layer-length, C-mean, C-std, count) rows for the report table."""
        return [(length,) + self.per_length[length]
                for length in sorted(self.per_length)]


def compression_stats(samples):
    by_length = defaultdict(list)
    everything = []
    for sample in samples:
        lengths = sample.layer_lengths
        for cur, nxt in zip(lengths, lengths[1:]):
            ratio = nxt / cur
            by_length[cur].append(ratio)
            everything.append(ratio)
    if not everything:
        return CompressionStats({}, float("nan"), float("nan"), 0)
    per_length = {
        length: (float(np.mean(vals)), float(np.std(vals)), len(vals))
        for length, vals in by_length.items()
    }
    return CompressionStats(per_length, float(np.mean(everything)),
                            float(np.std(everything)), len(everything))


def expected_node_bound(ratio, n):
    """Geometric node budget n / (1 - C) for a stable compression ratio."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"compression ratio must lie in (0, 1), got {ratio}")
    return n / (1.0 - ratio)


def partial_node_sum(ratio, n, height):
    """Exact partial series sum_{k=0..K} C^k * n for a tree of height K."""
    if height < 0:
        raise ValueError("height must be >= 0")
    return float(sum(ratio ** k * n for k in range(height + 1)))


def triangular_node_count(n):
    """Node count of a full triangular chart over n words."""
    if n < 1:
        raise ValueError("sentence length must be >= 1")
    return n * (n + 1) // 2


def complexity_fit(samples):
    """Least-squares coefficients (a2, a1) of node_count ~ a2*n^2 + a1*n.

    No constant term is fitted.  Needs at least three distinct sentence
    lengths to separate the quadratic and linear tendencies.
    """
    points = [(len(s.words), s.node_count) for s in samples]
    return fit_node_counts(points)


def fit_node_counts(points):
    lengths = np.array([p[0] for p in points], dtype=np.float64)
    counts = np.array([p[1] for p in points], dtype=np.float64)
    if len(set(lengths.tolist())) < 3:
        raise ValueError("complexity fit needs >= 3 distinct sentence lengths")
    design = np.stack([lengths ** 2, lengths], axis=1)
    coeffs, *_ = np.linalg.lstsq(design, counts, rcond=None)
    return float(coeffs[0]), float(coeffs[1])


def node_budget_report(samples):
    """Stratified vs triangular node totals, with the per-corpus ratio."""
    stratified = sum(s.node_count for s in samples)
    triangular = sum(triangular_node_count(len(s.words)) for s in samples)
    ratio = stratified / triangular if triangular else float("nan")
    return {"stratified_nodes": stratified, "triangular_nodes": triangular,
            "ratio": ratio}
