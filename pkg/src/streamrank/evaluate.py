"""Run (ranking method x detector) combinations and report the metric suite.

Timing separates phi generation from ranking, reported as the median over a
configurable number of runs (>= 3 by default) to damp scheduler noise; with
timing disabled both columns are absent, which keeps the whole artifact chain
byte-deterministic. Combinations run sequentially by default so the timings
are honest; in parallel mode the cells run concurrently and the timing
columns are blanked as non-comparable.
"""

from __future__ import annotations

import csv
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .detectors import compute_surface
from .errors import ConstantVector
from .hierarchy import Hierarchy
from .metrics import hamming_rank_distance, swap_correlation, topk_binary_metrics
from .ranking import RankingConfig, ScoredPoint, count_max_ties, rank_day
from .store import StreamStore
from .synth import GroundTruthLabel

from scipy.stats import rankdata

METRICS_HEADER = [
    "method",
    "detector",
    "phi_seconds",
    "rank_seconds",
    "ties",
    "accuracy",
    "f1",
    "roc_auc",
    "swap_corr",
    "hamming",
]


@dataclass
class MetricReport:
    method: str
    detector: str
    phi_seconds: float | None = None
    rank_seconds: float | None = None
    ties: int | None = None
    accuracy: float | None = None
    f1: float | None = None
    roc_auc: float | None = None
    swap_corr: float | None = None
    hamming: int | None = None
    notes: dict[str, str] = field(default_factory=dict)
    error: str | None = None


def _timed(fn, runs: int):
    """(result, median seconds | None). runs == 0 executes once, untimed."""
    if runs <= 0:
        return fn(), None
    durations = []
    result = None
    for _ in range(runs):
        start = time.perf_counter()
        result = fn()
        durations.append(time.perf_counter() - start)
    return result, statistics.median(durations)


def _score_labels(
    points: list[ScoredPoint], labels: list[GroundTruthLabel], report: MetricReport
) -> None:
    by_key = {(p.indicator, p.region, p.day): p.score for p in points}
    label_keys = [(lab.indicator, lab.region, lab.day) for lab in labels]
    label_key_set = set(label_keys)
    missing = [k for k in label_keys if k not in by_key]
    if missing:
        report.notes["labels"] = f"{len(missing)} labeled points were never scored"

    scores = list(by_key.values())
    flags = [k in label_key_set for k in by_key]
    for _ in missing:
        scores.append(-math.inf)
        flags.append(True)

    k = len(label_keys)
    if k == 0 or not scores:
        report.notes["metrics"] = "absent: no labels to compare against"
        return
    binary = topk_binary_metrics(scores, flags, k)
    report.accuracy = binary.accuracy
    report.f1 = binary.f1
    report.roc_auc = binary.roc_auc
    report.notes.update(binary.notes)

    if k >= 2:
        ordered = sorted(labels, key=lambda lab: lab.rank)
        label_scores = [by_key.get((lab.indicator, lab.region, lab.day), -math.inf) for lab in ordered]
        method_ranks = rankdata([-s for s in label_scores], method="min").astype(int)
        truth_ranks = [lab.rank for lab in ordered]
        try:
            report.swap_corr = swap_correlation(method_ranks, truth_ranks)
        except ConstantVector as exc:
            report.notes["swap_corr"] = f"absent: {exc}"
        report.hamming = hamming_rank_distance(method_ranks, truth_ranks)
    else:
        report.notes["ranking_metrics"] = "absent: fewer than 2 labels"


def compare_methods(
    store: StreamStore,
    h: Hierarchy,
    detectors: list,
    methods: list[str],
    eval_days: list[int],
    labels: list[GroundTruthLabel],
    cfg: RankingConfig | None = None,
    timing_runs: int = 3,
    parallel: bool = False,
) -> list[MetricReport]:
    """One MetricReport per (method x detector); failures fill the cell's error."""
    base = cfg or RankingConfig()
    indicators = store.indicators
    reports: list[MetricReport] = []

    for detector in detectors:
        try:
            surfaces, phi_seconds = _timed(
                lambda: {i: compute_surface(store, h, i, detector) for i in indicators},
                0 if parallel else timing_runs,
            )
        except Exception as exc:  # noqa: BLE001 - cell failures must not kill the run
            for method in methods:
                reports.append(MetricReport(method, detector.id, error=f"phi generation failed: {exc}"))
            continue

        def run_cell(method: str) -> MetricReport:
            report = MetricReport(method=method, detector=detector.id, phi_seconds=phi_seconds)
            try:
                cell_cfg = RankingConfig(
                    regime_halfwidth=base.regime_halfwidth,
                    threshold_quantile=base.threshold_quantile,
                    method=method,
                )

                def rank_all():
                    out = []
                    for indicator in indicators:
                        surface = surfaces[indicator]
                        for t in eval_days:
                            out.extend(rank_day(surface, h, t, cell_cfg))
                    return out

                points, rank_seconds = _timed(rank_all, 0 if parallel else timing_runs)
                report.rank_seconds = rank_seconds
                if points:
                    report.ties = count_max_ties(points)
                _score_labels(points, labels, report)
            except Exception as exc:  # noqa: BLE001
                report.error = str(exc)
            return report

        if parallel:
            with ThreadPoolExecutor(max_workers=len(methods)) as pool:
                reports.extend(pool.map(run_cell, methods))
        else:
            reports.extend(run_cell(m) for m in methods)
    return reports


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics_csv(reports: list[MetricReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for r in reports:
            writer.writerow(
                [
                    r.method,
                    r.detector,
                    "" if r.phi_seconds is None else f"{r.phi_seconds:.6f}",
                    "" if r.rank_seconds is None else f"{r.rank_seconds:.6f}",
                    _cell(r.ties),
                    _cell(r.accuracy),
                    _cell(r.f1),
                    _cell(r.roc_auc),
                    _cell(r.swap_corr),
                    _cell(r.hamming),
                ]
            )


def format_table(reports: list[MetricReport]) -> str:
    def fmt(value, spec=".3f"):
        if value is None:
            return "n/a"
        if isinstance(value, float):
            return format(value, spec)
        return str(value)

    headers = ["method", "detector", "phi s", "rank s", "ties", "acc", "f1", "auc", "swap", "hamming"]
    rows = []
    for r in reports:
        if r.error:
            rows.append([r.method, r.detector, "error: " + r.error, "", "", "", "", "", "", ""])
            continue
        rows.append(
            [
                r.method,
                r.detector,
                fmt(r.phi_seconds),
                fmt(r.rank_seconds),
                fmt(r.ties),
                fmt(r.accuracy),
                fmt(r.f1),
                fmt(r.roc_auc),
                fmt(r.swap_corr),
                fmt(r.hamming),
            ]
        )
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)))
    return "\n".join(lines)
