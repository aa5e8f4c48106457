"""Per-stream univariate test statistics (phi surfaces).

Detectors are pluggable: anything with an `id` and a `phi_array` method can
feed the ranking module, and externally computed surfaces can be loaded from
CSV. Two detectors ship here: an exponentially weighted moving average with a
leave-one-out kernel, and a linear autoregressive baseline.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientContext, ParseError
from .hierarchy import Hierarchy
from .store import Stream, StreamStore, convolve_centered, gaussian_smooth

SURFACE_HEADER = ["indicator", "region_id", "date", "phi", "detector_id"]


@dataclass(frozen=True)
class EwmaConfig:
    """Decay constant tau and truncation halfwidth of the weighting kernel."""

    tau: float = 2.0
    kernel_halfwidth: int = 28
    log_base: float = math.e

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.kernel_halfwidth < 1:
            raise ValueError(f"kernel_halfwidth must be >= 1, got {self.kernel_halfwidth}")
        if self.log_base <= 1:
            raise ValueError(f"log_base must exceed 1, got {self.log_base}")

    def kernel(self) -> np.ndarray:
        offsets = np.arange(-self.kernel_halfwidth, self.kernel_halfwidth + 1)
        k = np.exp(-np.abs(offsets) / self.tau)
        k[self.kernel_halfwidth] = 0.0  # leave-one-out: zero weight at the center
        return k


@dataclass(frozen=True)
class ResidualStats:
    median_l: float
    sigma_l: float


def _degenerate_sigma(sigma: float, value_scale: float) -> bool:
    """True when the residual spread is below double-precision noise for the
    stream's magnitude, i.e. the kernel fits the stream exactly."""
    return sigma <= 1e-12 * max(1.0, value_scale)


def ewma_predict(s: Stream, cfg: EwmaConfig, t: int) -> float:
    """Kernel-weighted mean of present neighbors of t, excluding t itself."""
    lo, hi = t - cfg.kernel_halfwidth, t + cfg.kernel_halfwidth
    inside = (s.days >= lo) & (s.days <= hi) & (s.days != t)
    days = s.days[inside]
    if len(days) == 0:
        raise InsufficientContext(
            f"no neighbor within +/-{cfg.kernel_halfwidth} days of day {t} "
            f"for ({s.indicator}, {s.region})"
        )
    weights = np.exp(-np.abs(days - t) / cfg.tau)
    return float(np.dot(weights, s.values[inside]) / np.sum(weights))


def _predictions(s: Stream, cfg: EwmaConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense values, validity mask, and leave-one-out predictions over the stream span."""
    dense, mask = s.dense(s.first_day, s.last_day)
    kernel = cfg.kernel()
    num = convolve_centered(np.where(mask, dense, 0.0), kernel)
    den = convolve_centered(mask.astype(float), kernel)
    with np.errstate(invalid="ignore", divide="ignore"):
        pred = num / den
    valid = mask & (den > 0)
    return dense, valid, pred


def residual_stats(s: Stream, cfg: EwmaConfig) -> ResidualStats:
    """Median and population std of prediction residuals over the full history."""
    dense, valid, pred = _predictions(s, cfg)
    l = (pred - dense)[valid]
    if len(l) == 0:
        raise InsufficientContext(f"no residuals computable for ({s.indicator}, {s.region})")
    return ResidualStats(median_l=float(np.median(l)), sigma_l=float(np.std(l)))


def ewma_phi(s: Stream, cfg: EwmaConfig, population: float, t: int) -> float:
    """|standardized residual| * log(history length) * log(population).

    sigma_l = 0 (a stream the kernel fits perfectly) yields phi = 0: there is
    no rankable surprise, and dividing by zero would make every such stream
    maximal instead.
    """
    value = s.value_at(t)
    if value is None:
        raise InsufficientContext(f"no observation at day {t} for ({s.indicator}, {s.region})")
    pred = ewma_predict(s, cfg, t)
    stats = residual_stats(s, cfg)
    if _degenerate_sigma(stats.sigma_l, float(np.max(np.abs(s.values)))):
        return 0.0
    z = abs((pred - value) - stats.median_l) / stats.sigma_l
    ln_base = math.log(cfg.log_base)
    history = math.log(s.observed_count) / ln_base
    pop = math.log(max(float(population), 2.0)) / ln_base
    return z * history * pop


class EwmaDetector:
    """Vectorized EWMA statistic over whole streams."""

    def __init__(self, cfg: EwmaConfig | None = None):
        self.cfg = cfg or EwmaConfig()

    @property
    def id(self) -> str:
        return "ewma"

    def phi_array(self, s: Stream, population: float, day_lo: int, day_hi: int) -> np.ndarray:
        out = np.full(day_hi - day_lo + 1, np.nan)
        if s.observed_count == 0:
            return out
        dense, valid, pred = _predictions(s, self.cfg)
        if not valid.any():
            return out
        l = pred - dense
        lv = l[valid]
        med = float(np.median(lv))
        sigma = float(np.std(lv))
        if _degenerate_sigma(sigma, float(np.max(np.abs(s.values)))):
            z = np.zeros_like(dense)
        else:
            z = np.abs(l - med) / sigma
        ln_base = math.log(self.cfg.log_base)
        scale = (math.log(s.observed_count) / ln_base) * (
            math.log(max(float(population), 2.0)) / ln_base
        )
        phi = np.where(valid, z * scale, np.nan)

        src_lo, src_hi = s.first_day, s.last_day
        lo = max(day_lo, src_lo)
        hi = min(day_hi, src_hi)
        if lo <= hi:
            out[lo - day_lo : hi - day_lo + 1] = phi[lo - src_lo : hi - src_lo + 1]
        return out


def _ar_training_rows(
    dense: np.ndarray, mask: np.ndarray, order: int, upto: int
) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix rows (intercept + lags) for all complete windows before `upto`."""
    rows = []
    targets = []
    for w in range(order, upto):
        if mask[w] and mask[w - order : w].all():
            rows.append(dense[w - order : w][::-1])
            targets.append(dense[w])
    if not rows:
        return np.empty((0, order + 1)), np.empty(0)
    x = np.asarray(rows)
    x = np.hstack([np.ones((len(x), 1)), x])
    return x, np.asarray(targets)


def ar_phi(s: Stream, order: int, t: int) -> float:
    """|one-step-ahead residual| / in-sample residual std, fit on history before t."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    before = int(np.sum(s.days < t))
    if before < order + 5:
        raise InsufficientContext(
            f"need at least {order + 5} present days before day {t}, have {before}"
        )
    value = s.value_at(t)
    if value is None:
        raise InsufficientContext(f"no observation at day {t}")
    dense, mask = s.dense(s.first_day, t)
    ti = t - s.first_day
    if ti < order or not mask[ti - order : ti].all():
        raise InsufficientContext(f"lag window before day {t} is not contiguous")
    x, y = _ar_training_rows(dense, mask, order, ti)
    if len(y) < order + 2:
        raise InsufficientContext(f"only {len(y)} complete training windows before day {t}")
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    in_sample = y - x @ beta
    sigma = float(np.std(in_sample))
    # Below the numerical noise of the fit: a perfectly fit history has no
    # surprise (phi 0) unless the probe residual itself clears the noise,
    # and the floor keeps phi finite either way.
    floor = 1e-9 * max(1.0, float(np.sqrt(np.mean(y * y))))
    row = np.concatenate([[1.0], dense[ti - order : ti][::-1]])
    residual = value - float(row @ beta)
    if abs(residual) < floor:
        return 0.0 if sigma < floor else abs(residual) / sigma
    return abs(residual) / max(sigma, floor)


class ArDetector:
    def __init__(self, order: int = 3):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        self.order = order

    @property
    def id(self) -> str:
        return "ar"

    def phi_array(self, s: Stream, population: float, day_lo: int, day_hi: int) -> np.ndarray:
        out = np.full(day_hi - day_lo + 1, np.nan)
        for day in s.days:
            day = int(day)
            if day < day_lo or day > day_hi:
                continue
            try:
                out[day - day_lo] = ar_phi(s, self.order, day)
            except InsufficientContext:
                continue
        return out


@dataclass
class PhiSurface:
    """Per-indicator matrix of test statistics over [day_lo, day_hi].

    `phi[region]` is NaN wherever the observation is absent or the detector
    lacked context; `evaluated[region]` marks the days an observation existed
    (so evaluated & isnan(phi) are the coverage gaps).
    """

    indicator: str
    detector_id: str
    day_lo: int
    day_hi: int
    phi: dict[str, np.ndarray] = field(default_factory=dict)
    evaluated: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_days(self) -> int:
        return self.day_hi - self.day_lo + 1

    def regions(self) -> list[str]:
        return sorted(self.phi)

    def phi_at(self, region: str, day: int) -> float | None:
        arr = self.phi.get(region)
        if arr is None or day < self.day_lo or day > self.day_hi:
            return None
        v = arr[day - self.day_lo]
        return None if np.isnan(v) else float(v)

    def entry_count(self) -> int:
        return int(sum(np.sum(~np.isnan(a)) for a in self.phi.values()))

    def coverage_gap_count(self) -> int:
        return int(
            sum(
                np.sum(self.evaluated[r] & np.isnan(self.phi[r]))
                for r in self.phi
                if r in self.evaluated
            )
        )


def compute_surface(
    store: StreamStore,
    h: Hierarchy,
    indicator: str,
    detector,
    window: tuple[int, int] | None = None,
    smooth_bandwidth: float | None = None,
) -> PhiSurface:
    """One phi per present observation per region in the window.

    Regions are processed independently and merged in sorted order, so the
    result is identical no matter how the per-region work is scheduled.
    Smoothing is off unless a bandwidth is given.
    """
    regions = store.regions_for(indicator)
    if window is None:
        days = [
            (store.stream(indicator, r).first_day, store.stream(indicator, r).last_day)
            for r in regions
            if store.stream(indicator, r).observed_count
        ]
        if not days:
            return PhiSurface(indicator, detector.id, 0, 0)
        window = (min(d[0] for d in days), max(d[1] for d in days))
    day_lo, day_hi = window
    surface = PhiSurface(indicator, detector.id, day_lo, day_hi)
    for region in regions:
        s = store.stream(indicator, region)
        if s.observed_count == 0:
            continue
        if smooth_bandwidth is not None:
            s = gaussian_smooth(s, smooth_bandwidth)
        population = h.region(region).population
        phi = detector.phi_array(s, population, day_lo, day_hi)
        _, mask = s.dense(day_lo, day_hi)
        surface.phi[region] = phi
        surface.evaluated[region] = mask
    return surface


def write_surface_csv(surface: PhiSurface, date_of, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SURFACE_HEADER)
        for region in surface.regions():
            arr = surface.phi[region]
            for i, v in enumerate(arr):
                if np.isnan(v):
                    continue
                day = surface.day_lo + i
                writer.writerow(
                    [surface.indicator, region, date_of(day).isoformat(), repr(float(v)), surface.detector_id]
                )


def load_surface_csv(path, day_of) -> PhiSurface:
    """Load an externally produced surface; ranking accepts it as-is."""
    entries: dict[str, dict[int, float]] = {}
    indicator = None
    detector_id = "external"
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != SURFACE_HEADER:
            raise ParseError(f"expected header {','.join(SURFACE_HEADER)!r} in {path}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(f"expected 5 columns, got {len(row)}", line=lineno)
            ind, region, date_s, phi_s, det = (c.strip() for c in row)
            if indicator is None:
                indicator, detector_id = ind, det
            elif ind != indicator:
                raise ParseError(f"mixed indicators in surface file: {indicator!r} vs {ind!r}", line=lineno)
            try:
                phi = float(phi_s)
            except ValueError:
                raise ParseError(f"bad phi {phi_s!r}", line=lineno) from None
            entries.setdefault(region, {})[day_of(date_s)] = phi
    if not entries:
        raise ParseError(f"surface file {path} has no rows")
    day_lo = min(min(d) for d in entries.values())
    day_hi = max(max(d) for d in entries.values())
    surface = PhiSurface(indicator, detector_id, day_lo, day_hi)
    for region, per_day in entries.items():
        arr = np.full(day_hi - day_lo + 1, np.nan)
        for day, phi in per_day.items():
            arr[day - day_lo] = phi
        surface.phi[region] = arr
        surface.evaluated[region] = ~np.isnan(arr)
    return surface


def make_detector(name: str, **params):
    if name == "ewma":
        cfg_params = {k: v for k, v in params.items() if v is not None}
        return EwmaDetector(EwmaConfig(**cfg_params)) if cfg_params else EwmaDetector()
    if name == "ar":
        order = params.get("order")
        return ArDetector(order) if order else ArDetector()
    raise ValueError(f"unknown detector {name!r} (expected 'ewma' or 'ar')")
