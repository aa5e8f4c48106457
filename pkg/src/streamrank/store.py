"""Revision-aware store of daily observations, one stream per (indicator, region).

Days are integer indices; the ISO date of day 0 (the epoch) lives in store
metadata so all internal math stays on integers. Missing days are absent, never
imputed. Ingest is single-writer; everything downstream reads the store as an
immutable snapshot.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptyStream, ParseError, UnknownIndicator, UnknownRegion
from .hierarchy import Hierarchy

OBSERVATION_HEADER = ["indicator", "region_id", "date", "value", "revision_seq"]
SCHEMA_VERSION = 1

MAX_REJECT_DETAILS = 50


def convolve_centered(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Same-length convolution centered on a symmetric odd-length kernel.

    Safe when the input is shorter than the kernel, unlike mode="same".
    """
    radius = len(kernel) // 2
    full = np.convolve(a, kernel)
    return full[radius : radius + len(a)]


@dataclass(frozen=True, slots=True)
class Observation:
    indicator: str
    region: str
    day: int
    value: float
    revision_seq: int


@dataclass(frozen=True)
class Stream:
    """Day-indexed values with explicit gaps (absent days are missing, not 0)."""

    indicator: str
    region: str
    days: np.ndarray
    values: np.ndarray

    @property
    def first_day(self) -> int:
        return int(self.days[0])

    @property
    def last_day(self) -> int:
        return int(self.days[-1])

    @property
    def observed_count(self) -> int:
        return len(self.days)

    def dense(self, day_lo: int, day_hi: int) -> tuple[np.ndarray, np.ndarray]:
        """Values over [day_lo, day_hi] with NaN gaps, plus the present mask."""
        n = day_hi - day_lo + 1
        out = np.full(n, np.nan)
        inside = (self.days >= day_lo) & (self.days <= day_hi)
        out[self.days[inside] - day_lo] = self.values[inside]
        return out, ~np.isnan(out)

    def value_at(self, day: int) -> float | None:
        idx = np.searchsorted(self.days, day)
        if idx < len(self.days) and self.days[idx] == day:
            return float(self.values[idx])
        return None


@dataclass
class IngestReport:
    rows: int = 0
    upserts: int = 0
    rejects: int = 0
    reject_details: list[tuple[int, str]] = field(default_factory=list)

    def reject(self, line: int, reason: str) -> None:
        self.rejects += 1
        if len(self.reject_details) < MAX_REJECT_DETAILS:
            self.reject_details.append((line, reason))


def _parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text)


class StreamStore:
    """Columnar store of observations keyed by (indicator, region, day)."""

    def __init__(self, hierarchy: Hierarchy, epoch: dt.date | None = None):
        self.hierarchy = hierarchy
        self.epoch = epoch
        # indicator -> region -> day -> (value, revision_seq)
        self._data: dict[str, dict[str, dict[int, tuple[float, int]]]] = {}
        self._pending_log: dict[str, list[tuple[str, int, float, int]]] = {}
        self._stream_cache: dict[tuple[str, str], Stream] = {}

    # -- basic queries -------------------------------------------------

    @property
    def indicators(self) -> list[str]:
        return sorted(self._data)

    @property
    def latest_day(self) -> int | None:
        days = [
            max(per_day)
            for per_region in self._data.values()
            for per_day in per_region.values()
            if per_day
        ]
        return max(days) if days else None

    def day_of(self, date: dt.date | str) -> int:
        if isinstance(date, str):
            date = _parse_date(date)
        if self.epoch is None:
            raise DataError("store has no epoch yet (nothing ingested)")
        return (date - self.epoch).days

    def date_of(self, day: int) -> dt.date:
        if self.epoch is None:
            raise DataError("store has no epoch yet (nothing ingested)")
        return self.epoch + dt.timedelta(days=int(day))

    def regions_for(self, indicator: str) -> list[str]:
        if indicator not in self._data:
            raise UnknownIndicator(f"unknown indicator {indicator!r}")
        return sorted(self._data[indicator])

    def stream(self, indicator: str, region: str) -> Stream:
        if indicator not in self._data:
            raise UnknownIndicator(f"unknown indicator {indicator!r}")
        per_region = self._data[indicator]
        if region not in per_region:
            if region not in self.hierarchy.regions:
                raise UnknownRegion(f"unknown region {region!r}")
            return Stream(indicator, region, np.empty(0, dtype=np.int64), np.empty(0))
        cached = self._stream_cache.get((indicator, region))
        if cached is not None:
            return cached
        per_day = per_region[region]
        days = np.array(sorted(per_day), dtype=np.int64)
        values = np.array([per_day[int(d)][0] for d in days])
        s = Stream(indicator, region, days, values)
        self._stream_cache[(indicator, region)] = s
        return s

    def streams(self, indicator: str) -> dict[str, Stream]:
        return {r: self.stream(indicator, r) for r in self.regions_for(indicator)}

    def get_window(self, indicator: str, region: str, from_day: int, to_day: int) -> Stream:
        """Live values in [from_day, to_day]; absent days stay absent."""
        if from_day > to_day:
            raise ValueError(f"from_day {from_day} > to_day {to_day}")
        s = self.stream(indicator, region)
        inside = (s.days >= from_day) & (s.days <= to_day)
        return Stream(indicator, region, s.days[inside], s.values[inside])

    # -- ingest ----------------------------------------------------------

    def ingest(self, source: str) -> IngestReport:
        """Upsert a CSV of observations; higher revision_seq supersedes.

        Malformed rows and unknown regions are collected into the report as
        rejects rather than aborting the whole file.
        """
        reader = csv.reader(io.StringIO(source))
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty observation file") from None
        if [h.strip() for h in header] != OBSERVATION_HEADER:
            raise ParseError(
                f"expected header {','.join(OBSERVATION_HEADER)!r}, got {','.join(header)!r}"
            )

        rows = list(reader)
        if self.epoch is None:
            date_cols = [r[2].strip() for r in rows if len(r) == 5]
            iso = [d for d in date_cols if len(d) == 10]
            if iso:
                try:
                    self.epoch = _parse_date(min(iso))
                except ValueError:
                    pass

        report = IngestReport()
        for lineno, row in enumerate(rows, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            report.rows += 1
            if len(row) != 5:
                report.reject(lineno, f"expected 5 columns, got {len(row)}")
                continue
            indicator, region, date_s, value_s, rev_s = (c.strip() for c in row)
            if region not in self.hierarchy.regions:
                report.reject(lineno, f"unknown region {region!r}")
                continue
            try:
                date = _parse_date(date_s)
            except ValueError:
                report.reject(lineno, f"bad date {date_s!r}")
                continue
            try:
                value = float(value_s)
            except ValueError:
                report.reject(lineno, f"bad value {value_s!r}")
                continue
            if not math.isfinite(value):
                report.reject(lineno, f"non-finite value {value_s!r}")
                continue
            try:
                rev = int(rev_s)
            except ValueError:
                report.reject(lineno, f"bad revision_seq {rev_s!r}")
                continue
            if rev < 0:
                report.reject(lineno, f"negative revision_seq {rev}")
                continue
            day = (date - self.epoch).days
            if day < 0:
                report.reject(lineno, f"date {date_s} precedes store epoch {self.epoch.isoformat()}")
                continue
            if self._upsert(indicator, region, day, value, rev):
                report.upserts += 1
                self._pending_log.setdefault(indicator, []).append((region, day, value, rev))
        return report

    def _upsert(self, indicator: str, region: str, day: int, value: float, rev: int) -> bool:
        per_day = self._data.setdefault(indicator, {}).setdefault(region, {})
        live = per_day.get(day)
        if live is not None and rev <= live[1]:
            return False
        per_day[day] = (value, rev)
        self._stream_cache.pop((indicator, region), None)
        return True

    # -- persistence -------------------------------------------------------

    def save(self, root: str | os.PathLike) -> None:
        """Append pending rows to the per-indicator logs and compact snapshots."""
        root = os.fspath(root)
        os.makedirs(os.path.join(root, "logs"), exist_ok=True)
        os.makedirs(os.path.join(root, "snapshot"), exist_ok=True)
        for indicator, entries in self._pending_log.items():
            log_path = os.path.join(root, "logs", f"{indicator}.csv")
            new = not os.path.exists(log_path)
            with open(log_path, "a", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                if new:
                    writer.writerow(["region_id", "day", "value", "revision_seq"])
                for region, day, value, rev in entries:
                    writer.writerow([region, day, repr(value), rev])
        self._pending_log.clear()
        for indicator, per_region in self._data.items():
            snap_path = os.path.join(root, "snapshot", f"{indicator}.csv")
            with open(snap_path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["region_id", "day", "value", "revision_seq"])
                for region in sorted(per_region):
                    per_day = per_region[region]
                    for day in sorted(per_day):
                        value, rev = per_day[day]
                        writer.writerow([region, day, repr(value), rev])
        meta = {
            "schema_version": SCHEMA_VERSION,
            "epoch": self.epoch.isoformat() if self.epoch else None,
        }
        with open(os.path.join(root, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, root: str | os.PathLike, hierarchy: Hierarchy) -> "StreamStore":
        root = os.fspath(root)
        with open(os.path.join(root, "meta.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        epoch = _parse_date(meta["epoch"]) if meta.get("epoch") else None
        store = cls(hierarchy, epoch=epoch)
        snap_dir = os.path.join(root, "snapshot")
        if os.path.isdir(snap_dir):
            for name in sorted(os.listdir(snap_dir)):
                if not name.endswith(".csv"):
                    continue
                indicator = name[:-4]
                with open(os.path.join(snap_dir, name), encoding="utf-8") as fh:
                    reader = csv.reader(fh)
                    next(reader, None)
                    for row in reader:
                        region, day, value, rev = row
                        store._upsert(indicator, region, int(day), float(value), int(rev))
        store._pending_log.clear()
        return store


def gaussian_smooth(s: Stream, bandwidth: float) -> Stream:
    """Gaussian-kernel weighted mean over present days within +/- 3*bandwidth.

    Weights are renormalized over the days actually present, so gaps widen the
    effective neighborhood instead of dragging values toward zero. Gaps remain
    gaps and the day axis is unchanged.
    """
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    if s.observed_count == 0:
        raise EmptyStream(f"stream ({s.indicator}, {s.region}) has no observations")
    radius = int(math.ceil(3.0 * bandwidth))
    offsets = np.arange(-radius, radius + 1)
    kernel = np.exp(-(offsets.astype(float) ** 2) / (2.0 * bandwidth * bandwidth))

    dense, mask = s.dense(s.first_day, s.last_day)
    filled = np.where(mask, dense, 0.0)
    num = convolve_centered(filled, kernel)
    den = convolve_centered(mask.astype(float), kernel)
    with np.errstate(invalid="ignore", divide="ignore"):
        smoothed_dense = num / den  # den >= kernel center weight at present days
    smoothed = smoothed_dense[s.days - s.first_day]
    return Stream(s.indicator, s.region, s.days.copy(), smoothed)


def write_observations_csv(path, rows) -> None:
    """rows: iterable of (indicator, region_id, iso_date, value, revision_seq)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(OBSERVATION_HEADER)
        for indicator, region, date, value, rev in rows:
            writer.writerow([indicator, region, date, repr(float(value)), rev])
