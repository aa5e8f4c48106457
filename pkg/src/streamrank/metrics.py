"""Binary and ranking metrics for comparing scores against labels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import ConstantVector, LengthMismatch


@dataclass
class BinaryMetrics:
    accuracy: float
    f1: float
    roc_auc: float | None
    k_effective: int
    notes: dict[str, str] = field(default_factory=dict)


def topk_binary_metrics(scores, labels, k: int) -> BinaryMetrics:
    """Treat the top-k scores (ties at the boundary included) as positives.

    roc_auc is rank-based over the raw scores and absent (flagged) when the
    labels are all-positive or all-negative.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if len(scores) != len(labels):
        raise LengthMismatch(f"{len(scores)} scores vs {len(labels)} labels")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > len(scores):
        k = len(scores)

    cutoff = np.sort(scores)[::-1][k - 1]
    predicted = scores >= cutoff  # boundary ties are all included
    k_effective = int(predicted.sum())

    tp = int(np.sum(predicted & labels))
    tn = int(np.sum(~predicted & ~labels))
    fp = int(np.sum(predicted & ~labels))
    fn = int(np.sum(~predicted & labels))
    accuracy = (tp + tn) / len(scores)
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0

    notes = {}
    if k_effective > k:
        notes["topk"] = f"boundary ties expanded k from {k} to {k_effective}"
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        auc = None
        notes["roc_auc"] = "absent: degenerate labels (all positive or all negative)"
    else:
        ranks = rankdata(scores)
        auc = float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))
    return BinaryMetrics(accuracy=accuracy, f1=f1, roc_auc=auc, k_effective=k_effective, notes=notes)


def swap_correlation(rank_a, rank_b) -> float:
    """Kendall tau-b between two rank vectors over the same items.

    Pairs are counted with integer arithmetic so clean permutations hit the
    +/-1 endpoints exactly (scipy's normalization is a few ULP short); the
    tie handling matches scipy.stats.kendalltau.
    """
    a = np.asarray(rank_a, dtype=float)
    b = np.asarray(rank_b, dtype=float)
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} ranks")
    if len(a) < 2:
        raise LengthMismatch("need at least 2 items to correlate")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise ConstantVector("swap correlation undefined for a constant rank vector")
    n = len(a)
    concordant = discordant = tied_a = tied_b = 0
    for i in range(n - 1):
        da = a[i] - a[i + 1 :]
        db = b[i] - b[i + 1 :]
        tied_a += int(np.sum(da == 0))
        tied_b += int(np.sum(db == 0))
        prod = da * db
        concordant += int(np.sum(prod > 0))
        discordant += int(np.sum(prod < 0))
    n0 = n * (n - 1) // 2
    denom = math.sqrt((n0 - tied_a) * (n0 - tied_b))
    if denom == 0:
        raise ConstantVector("swap correlation undefined (no rank variation)")
    return (concordant - discordant) / denom


def hamming_rank_distance(rank_a, rank_b) -> int:
    """Number of items whose assigned rank differs."""
    a = np.asarray(rank_a)
    b = np.asarray(rank_b)
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} ranks")
    return int(np.sum(a != b))
