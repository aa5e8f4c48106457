"""Calibrate phi surfaces into comparable scores: threshold, sibling, outshines.

Outshines pools block maxima (one block = one sibling set x one day) from the
28-day regime around the evaluated day into a single reference distribution
per (indicator, day), scores every region's phi against that same pool, and
scales the quantile by ln(pool size)/ln(max possible size) so sparse
indicators are down-weighted honestly.

All three rankers are pure functions of (surface, hierarchy, config); nothing
here mutates shared state, so days and indicators can be ranked concurrently.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EmptyReference, InsufficientHistory
from .hierarchy import Hierarchy

log = logging.getLogger(__name__)

RANKINGS_HEADER = [
    "indicator",
    "region_id",
    "date",
    "phi",
    "score",
    "method",
    "reference_size",
    "max_size",
]

METHODS = ("threshold", "sibling", "outshines")


@dataclass(frozen=True)
class RankingConfig:
    regime_halfwidth: int = 14
    threshold_quantile: float = 0.99
    method: str = "outshines"

    def __post_init__(self):
        if self.regime_halfwidth < 1:
            raise ValueError(f"regime_halfwidth must be >= 1, got {self.regime_halfwidth}")
        if not 0.0 < self.threshold_quantile < 1.0:
            raise ValueError(
                f"threshold_quantile must be in (0, 1), got {self.threshold_quantile}"
            )
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")


@dataclass(frozen=True)
class ReferenceDistribution:
    """Pooled block maxima for one (indicator, day), values kept sorted."""

    indicator: str
    day: int
    values: np.ndarray
    max_size: int

    @property
    def size(self) -> int:
        return len(self.values)


class ScoredPoint(NamedTuple):
    indicator: str
    region: str
    day: int
    phi: float
    score: float
    method: str
    reference_size: int
    max_size: int | None = None


def empirical_quantile(x: float, values: np.ndarray) -> float:
    """Inclusive empirical quantile: |{p in P : p <= x}| / |P|."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        raise EmptyReference("empirical quantile of an empty reference")
    return float(np.sum(values <= x)) / len(values)


def build_reference(
    surface, h: Hierarchy, t: int, cfg: RankingConfig
) -> ReferenceDistribution:
    """Pool per-(sibling set, day) maxima over [t-delta, t) u (t, t+delta].

    Blocks with no data contribute nothing; day t itself never contributes,
    so a point is never compared against its own day.
    """
    delta = cfg.regime_halfwidth
    lo = max(t - delta, surface.day_lo)
    hi = min(t + delta, surface.day_hi)
    pieces: list[np.ndarray] = []
    if lo <= hi:
        t_col = t - lo if lo <= t <= hi else None
        for sib in h.sibling_sets:
            rows = [
                surface.phi[m][lo - surface.day_lo : hi - surface.day_lo + 1]
                for m in sorted(sib.members)
                if m in surface.phi
            ]
            if not rows:
                continue
            stacked = rows[0][np.newaxis, :] if len(rows) == 1 else np.vstack(rows)
            present = ~np.all(np.isnan(stacked), axis=0)
            if t_col is not None:
                present = present.copy()
                present[t_col] = False
            if not present.any():
                continue
            pieces.append(np.nanmax(stacked[:, present], axis=0))
    max_size = len(h.sibling_sets) * 2 * delta
    if not pieces:
        raise EmptyReference(f"no block of ({surface.indicator}) has data around day {t}")
    values = np.sort(np.concatenate(pieces))
    return ReferenceDistribution(surface.indicator, t, values, max_size)


def outshines_score(phi: float, ref: ReferenceDistribution) -> float:
    """Quantile in the pooled block maxima, scaled by ln|P|/ln(max |P|)."""
    n = ref.size
    if n == 0:
        raise EmptyReference("cannot score against an empty reference")
    if ref.max_size < 2:
        raise ValueError(f"max_size must be >= 2, got {ref.max_size}")
    count = int(np.searchsorted(ref.values, phi, side="right"))
    y = (count / n) * (math.log(n) / math.log(ref.max_size))
    return min(max(y, 0.0), 1.0)


def rank_outshines(surface, h: Hierarchy, t: int, cfg: RankingConfig) -> list[ScoredPoint]:
    """Score every region with phi at day t against the shared reference."""
    try:
        ref = build_reference(surface, h, t, cfg)
    except EmptyReference as exc:
        log.warning("outshines: %s", exc)
        return []
    n = ref.size
    scale = math.log(n) / math.log(ref.max_size)
    points = []
    for region in surface.regions():
        phi = surface.phi_at(region, t)
        if phi is None:
            continue
        count = int(np.searchsorted(ref.values, phi, side="right"))
        y = (count / n) * scale
        y = min(max(y, 0.0), 1.0)
        points.append(
            ScoredPoint(surface.indicator, region, t, phi, y, "outshines", n, ref.max_size)
        )
    points.sort(key=lambda p: (-p.score, p.region))
    return points


def rank_sibling(surface, h: Hierarchy, t: int) -> list[ScoredPoint]:
    """Mean, over the region's sibling sets, of the quantile of phi(t) in the
    set's pooled phi over all days except t."""
    if not (surface.day_lo <= t <= surface.day_hi):
        return []
    t_idx = t - surface.day_lo
    quantiles: dict[str, list[float]] = {}
    pool_sizes: dict[str, int] = {}
    phi_at_t: dict[str, float] = {}
    keep = np.ones(surface.n_days, dtype=bool)
    keep[t_idx] = False
    for sib in h.sibling_sets:
        members = [m for m in sorted(sib.members) if m in surface.phi]
        if not members:
            continue
        stacked = np.vstack([surface.phi[m] for m in members])
        pool = stacked[:, keep].ravel()
        pool = pool[~np.isnan(pool)]
        n_pool = len(pool)
        if n_pool == 0:
            continue  # empty set pool: skipped from the mean
        pool.sort()
        phis = stacked[:, t_idx]
        qs = np.searchsorted(pool, phis, side="right") / float(n_pool)
        for i in np.flatnonzero(~np.isnan(phis)):
            m = members[i]
            entry = quantiles.get(m)
            if entry is None:
                quantiles[m] = [qs[i]]
                pool_sizes[m] = n_pool
                phi_at_t[m] = float(phis[i])
            else:
                entry.append(qs[i])
                pool_sizes[m] += n_pool
    points = [
        ScoredPoint(
            surface.indicator,
            region,
            t,
            phi_at_t[region],
            float(sum(qs) / len(qs)),
            "sibling",
            pool_sizes[region],
        )
        for region, qs in quantiles.items()
    ]
    points.sort(key=lambda p: (-p.score, p.region))
    return points


def _history_threshold(history: np.ndarray, quantile: float) -> float:
    """Smallest value whose inclusive empirical CDF reaches `quantile`."""
    ordered = np.sort(history)
    k = math.ceil(quantile * len(ordered))
    return float(ordered[max(k, 1) - 1])


def rank_threshold_point(
    surface, indicator: str, region: str, t: int, cfg: RankingConfig
) -> ScoredPoint:
    """Binary flag: 1 iff phi(t) strictly exceeds the stream's own quantile threshold."""
    phi = surface.phi_at(region, t)
    if phi is None:
        raise InsufficientHistory(f"no phi at day {t} for ({indicator}, {region})")
    arr = surface.phi.get(region)
    history = np.delete(arr, t - surface.day_lo)
    history = history[~np.isnan(history)]
    if len(history) < 2:
        raise InsufficientHistory(
            f"need >= 2 historical phi values for ({indicator}, {region}), have {len(history)}"
        )
    threshold = _history_threshold(history, cfg.threshold_quantile)
    y = 1.0 if phi > threshold else 0.0
    return ScoredPoint(indicator, region, t, phi, y, "threshold", len(history))


def rank_threshold(surface, h: Hierarchy, t: int, cfg: RankingConfig) -> list[ScoredPoint]:
    points = []
    for region in surface.regions():
        try:
            points.append(rank_threshold_point(surface, surface.indicator, region, t, cfg))
        except InsufficientHistory:
            continue
    points.sort(key=lambda p: (-p.score, p.region))
    return points


RANKERS = {
    "outshines": lambda surface, h, t, cfg: rank_outshines(surface, h, t, cfg),
    "sibling": lambda surface, h, t, cfg: rank_sibling(surface, h, t),
    "threshold": lambda surface, h, t, cfg: rank_threshold(surface, h, t, cfg),
}


def rank_day(surface, h: Hierarchy, t: int, cfg: RankingConfig) -> list[ScoredPoint]:
    return RANKERS[cfg.method](surface, h, t, cfg)


def score_resolution(surface, h: Hierarchy, cfg: RankingConfig) -> dict[str, int]:
    """Distinct achievable quantile levels per method, from actual coverage.

    A reference with n values supports n+1 quantile levels, so resolution is
    max_size+1 for outshines, the largest set's all-days pool+1 for sibling,
    and the longest stream's history+1 for threshold.
    """
    counts = {r: int(np.sum(~np.isnan(arr))) for r, arr in surface.phi.items()}
    sibling_pool = 0
    for sib in h.sibling_sets:
        pool = sum(counts.get(m, 0) for m in sib.members)
        sibling_pool = max(sibling_pool, pool)
    return {
        "outshines": len(h.sibling_sets) * 2 * cfg.regime_halfwidth + 1,
        "sibling": sibling_pool + 1,
        "threshold": max(counts.values(), default=0) + 1,
    }


def count_max_ties(points: list[ScoredPoint]) -> int:
    """Points sharing the maximal score, compared with exact equality."""
    if not points:
        raise ValueError("count_max_ties of an empty ranking")
    top = max(p.score for p in points)
    return sum(1 for p in points if p.score == top)


def write_rankings_csv(points: list[ScoredPoint], date_of, path) -> None:
    ordered = sorted(points, key=lambda p: (-p.score, p.indicator, p.region, p.day))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RANKINGS_HEADER)
        for p in ordered:
            writer.writerow(
                [
                    p.indicator,
                    p.region,
                    date_of(p.day).isoformat(),
                    repr(float(p.phi)),
                    repr(float(p.score)),
                    p.method,
                    p.reference_size,
                    "" if p.max_size is None else p.max_size,
                ]
            )
