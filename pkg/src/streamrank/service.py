"""HTTP gateway: serve precomputed rankings and stream context, persist labels.

The service is read-only over rankings and streams (batch artifacts on disk);
only the label store mutates, through a single appender. Every response
carries a schema_version field.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .errors import UnknownIndicator, UnknownRegion, ValidationError
from .hierarchy import Hierarchy, context_of
from .labels import LabelStore, TriageRecord
from .ranking import RANKINGS_HEADER
from .store import StreamStore

SCHEMA_VERSION = 1
DEFAULT_LIMIT = 25


@dataclass
class GatewayData:
    hierarchy: Hierarchy
    store: StreamStore
    rankings_dir: str
    labels: LabelStore

    def rankings_for(self, date: str) -> list[dict]:
        path = os.path.join(self.rankings_dir, f"{date}.csv")
        if not os.path.exists(path):
            raise FileNotFoundError(date)
        rows = []
        with open(path, encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != RANKINGS_HEADER:
                raise ValidationError(f"rankings file {path} has an unexpected header")
            for row in reader:
                rows.append(
                    {
                        "indicator": row[0],
                        "region_id": row[1],
                        "date": row[2],
                        "phi": float(row[3]),
                        "score": float(row[4]),
                        "method": row[5],
                        "reference_size": int(row[6]) if row[6] else None,
                        "max_size": int(row[7]) if row[7] else None,
                    }
                )
        rows.sort(key=lambda r: (-r["score"], r["indicator"], r["region_id"]))
        return rows


class TriageRecordBody(BaseModel):
    indicator: str
    region_id: str
    date: str
    rater: str
    verdict: str
    rank: int | None = None
    note: str = ""
    timestamp: str = ""


def _series(store: StreamStore, indicator: str, region: str, day_lo: int, day_hi: int, h: Hierarchy) -> dict:
    s = store.get_window(indicator, region, day_lo, day_hi)
    points = []
    by_day = {int(d): float(v) for d, v in zip(s.days, s.values)}
    for day in range(day_lo, day_hi + 1):
        points.append(
            {
                "date": store.date_of(day).isoformat(),
                "value": by_day.get(day),  # null marks a gap, never interpolated
            }
        )
    region_info = h.region(region)
    return {
        "region_id": region,
        "tier": region_info.tier,
        "population": region_info.population,
        "points": points,
    }


def create_app(data: GatewayData) -> FastAPI:
    app = FastAPI(title="streamrank gateway", docs_url=None, redoc_url=None)
    # The triage UI is a static page on another origin; the service deploys
    # behind a trusted boundary, so a permissive CORS policy is fine.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/api/health")
    def health():
        return {
            "schema_version": SCHEMA_VERSION,
            "status": "ok",
            "indicators": data.store.indicators,
            "latest_day": data.store.latest_day,
        }

    @app.get("/api/rankings")
    def rankings(
        date: str,
        limit: int = Query(DEFAULT_LIMIT, ge=1),
        indicator: str | None = None,
    ):
        try:
            rows = data.rankings_for(date)
        except FileNotFoundError:
            raise HTTPException(status_code=404, detail=f"no rankings for {date}") from None
        if indicator is not None:
            rows = [r for r in rows if r["indicator"] == indicator]
        rows = rows[:limit]
        for r in rows:
            r["triage"] = data.labels.status_for(r["indicator"], r["region_id"], r["date"])
        return {"schema_version": SCHEMA_VERSION, "date": date, "points": rows}

    @app.get("/api/context")
    def context(indicator: str, region: str, date: str, window: int = Query(28, ge=1)):
        try:
            day = data.store.day_of(date)
            ctx = context_of(data.hierarchy, region)
            day_lo, day_hi = day - window, day + window
            target = _series(data.store, indicator, region, day_lo, day_hi, data.hierarchy)
            parents = [
                _series(data.store, indicator, r, day_lo, day_hi, data.hierarchy)
                for r in sorted(ctx.parents)
            ]
            siblings = [
                _series(data.store, indicator, r, day_lo, day_hi, data.hierarchy)
                for r in sorted(ctx.siblings)
            ]
            children = [
                _series(data.store, indicator, r, day_lo, day_hi, data.hierarchy)
                for r in sorted(ctx.children)
            ]
        except UnknownRegion as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except UnknownIndicator as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        return {
            "schema_version": SCHEMA_VERSION,
            "indicator": indicator,
            "date": date,
            "evaluated_date": date,
            "target": target,
            "parents": parents,
            "siblings": siblings,
            "children": children,
        }

    @app.post("/api/labels")
    def submit_label(body: TriageRecordBody):
        record = TriageRecord(
            indicator=body.indicator,
            region_id=body.region_id,
            date=body.date,
            rater=body.rater,
            verdict=body.verdict,
            rank=body.rank,
            note=body.note,
            timestamp=body.timestamp,
        )
        try:
            seq = data.labels.append(record)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {"schema_version": SCHEMA_VERSION, "seq": seq}

    @app.get("/api/labels")
    def get_labels(date: str | None = None):
        return {"schema_version": SCHEMA_VERSION, "labels": data.labels.latest(date=date)}

    return app


def load_gateway_data(store_dir: str, rankings_dir: str | None, labels_path: str | None) -> GatewayData:
    from .hierarchy import load_hierarchy_path

    hierarchy = load_hierarchy_path(os.path.join(store_dir, "hierarchy.csv"))
    store = StreamStore.load(store_dir, hierarchy)
    return GatewayData(
        hierarchy=hierarchy,
        store=store,
        rankings_dir=rankings_dir or os.path.join(store_dir, "rankings"),
        labels=LabelStore(labels_path or os.path.join(store_dir, "labels.jsonl")),
    )
