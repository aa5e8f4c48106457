"""Append-only triage label store (one JSON object per line).

A record is durable before its sequence id is returned (append, flush, fsync,
then ack), and records are never mutated: a later timestamp for the same
(indicator, region, date, rater) key supersedes earlier ones at read time.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import threading
from dataclasses import asdict, dataclass

from .errors import StorageError, ValidationError

VERDICTS = ("worth_investigating", "dismissed")


@dataclass(frozen=True)
class TriageRecord:
    indicator: str
    region_id: str
    date: str
    rater: str
    verdict: str
    rank: int | None = None
    note: str = ""
    timestamp: str = ""


def validate_record(record: TriageRecord) -> TriageRecord:
    """Check fields; fills in a UTC timestamp when one is missing."""
    for name in ("indicator", "region_id", "date", "rater"):
        if not getattr(record, name):
            raise ValidationError(f"{name} must be nonempty")
    try:
        dt.date.fromisoformat(record.date)
    except ValueError:
        raise ValidationError(f"date {record.date!r} is not ISO-8601") from None
    if record.verdict not in VERDICTS:
        raise ValidationError(f"verdict must be one of {VERDICTS}, got {record.verdict!r}")
    if record.rank is not None and not 1 <= record.rank <= 5:
        raise ValidationError(f"rank must be in 1..5 when present, got {record.rank}")
    if record.timestamp:
        return record
    now = dt.datetime.now(dt.timezone.utc).isoformat()
    return TriageRecord(**{**asdict(record), "timestamp": now})


class LabelStore:
    """Single-appender JSONL store; safe for concurrent readers."""

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        self._lock = threading.Lock()
        self._seq: int | None = None
        os.makedirs(os.path.dirname(os.path.abspath(self.path)), exist_ok=True)

    def append(self, record: TriageRecord) -> int:
        record = validate_record(record)
        with self._lock:
            seq = self._next_seq()
            payload = {"seq": seq, **asdict(record)}
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(payload, sort_keys=True) + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageError(f"could not append label: {exc}") from exc
        return seq

    def _next_seq(self) -> int:
        if self._seq is None:
            records = self._read_all()
            self._seq = records[-1]["seq"] if records else 0
        self._seq += 1
        return self._seq

    def _read_all(self) -> list[dict]:
        if not os.path.exists(self.path):
            return []
        out = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def records(self) -> list[dict]:
        return self._read_all()

    def latest(self, date: str | None = None) -> list[dict]:
        """Live records after supersession, optionally restricted to one date."""
        live: dict[tuple, dict] = {}
        for rec in self._read_all():
            key = (rec["indicator"], rec["region_id"], rec["date"], rec["rater"])
            old = live.get(key)
            if old is None or (rec["timestamp"], rec["seq"]) >= (old["timestamp"], old["seq"]):
                live[key] = rec
        out = [r for r in live.values() if date is None or r["date"] == date]
        out.sort(key=lambda r: r["seq"])
        return out

    def status_for(self, indicator: str, region_id: str, date: str) -> dict | None:
        """Most recent live record for a point, across raters."""
        best = None
        for rec in self.latest(date=date):
            if rec["indicator"] == indicator and rec["region_id"] == region_id:
                if best is None or (rec["timestamp"], rec["seq"]) >= (best["timestamp"], best["seq"]):
                    best = rec
        return best
