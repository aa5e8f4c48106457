"""Labeled synthetic corpora: hierarchical streams with planted point outliers.

A corpus stands in for real surveillance snapshots: seasonal + weekday
structure, multiplicative noise, children that sum only approximately to
their parents, random missingness, provider-style whole-sibling-set outage
windows, and additive spikes of strictly ordered magnitude whose positions
form the ground truth.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import SpecError
from .hierarchy import Hierarchy, Region, build_hierarchy, write_hierarchy_csv
from .store import write_observations_csv

LABELS_HEADER = ["indicator", "region_id", "date", "rank", "rater", "timestamp"]

WEEKDAY_PATTERN = np.array([0.30, 0.10, 0.00, -0.05, 0.15, -1.00, -1.20])


@dataclass(frozen=True)
class PlantedOutlier:
    region: str
    day: int
    magnitude_multiplier: float


@dataclass(frozen=True)
class SetOutage:
    """All members of the sibling set under `parent_id` go dark for [day_lo, day_hi]."""

    parent_id: str
    day_lo: int
    day_hi: int


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int
    tier_branching: tuple[int, ...]
    days: int
    seasonal_amplitude: float = 0.3
    noise_scale: float = 0.1
    weekday_amplitude: float = 0.15
    missing_rate: float = 0.0
    outliers: tuple[PlantedOutlier, ...] = ()
    outages: tuple[SetOutage, ...] = ()
    indicator: str = "synthetic_cases"
    epoch: str = "2023-01-01"

    def validate(self) -> None:
        if not self.tier_branching or any(b < 1 for b in self.tier_branching):
            raise SpecError(f"tier_branching must be nonempty positive ints, got {self.tier_branching}")
        if self.days < 1:
            raise SpecError(f"days must be >= 1, got {self.days}")
        if not 0.0 <= self.missing_rate < 1.0:
            raise SpecError(f"missing_rate must be in [0, 1), got {self.missing_rate}")
        positions = [(o.region, o.day) for o in self.outliers]
        if len(set(positions)) != len(positions):
            raise SpecError("planted outlier positions must be unique")
        magnitudes = [o.magnitude_multiplier for o in self.outliers]
        if len(set(magnitudes)) != len(magnitudes):
            raise SpecError("magnitude multipliers must be strictly ordered (no duplicates)")
        for o in self.outliers:
            if not 0 <= o.day < self.days:
                raise SpecError(f"outlier day {o.day} outside [0, {self.days})")
        for g in self.outages:
            if g.day_lo > g.day_hi or g.day_lo < 0 or g.day_hi >= self.days:
                raise SpecError(f"outage window [{g.day_lo}, {g.day_hi}] invalid for T={self.days}")


@dataclass(frozen=True)
class GroundTruthLabel:
    indicator: str
    region: str
    day: int
    rank: int  # 1 = strongest planted magnitude


@dataclass
class Corpus:
    spec: SyntheticSpec
    hierarchy: Hierarchy
    observations: list[tuple[str, str, str, float, int]]
    labels: list[GroundTruthLabel]

    def write(self, outdir: str | os.PathLike) -> dict[str, str]:
        outdir = os.fspath(outdir)
        os.makedirs(outdir, exist_ok=True)
        paths = {
            "hierarchy": os.path.join(outdir, "hierarchy.csv"),
            "observations": os.path.join(outdir, "observations.csv"),
            "labels": os.path.join(outdir, "labels.csv"),
            "meta": os.path.join(outdir, "meta.json"),
        }
        write_hierarchy_csv(self.hierarchy, paths["hierarchy"])
        write_observations_csv(paths["observations"], self.observations)
        epoch = dt.date.fromisoformat(self.spec.epoch)
        with open(paths["labels"], "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LABELS_HEADER)
            for lab in self.labels:
                date = (epoch + dt.timedelta(days=lab.day)).isoformat()
                writer.writerow([lab.indicator, lab.region, date, lab.rank, "ground_truth", self.spec.epoch])
        with open(paths["meta"], "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "seed": self.spec.seed,
                    "indicator": self.spec.indicator,
                    "tier_branching": list(self.spec.tier_branching),
                    "days": self.spec.days,
                    "epoch": self.spec.epoch,
                    "planted_outliers": len(self.labels),
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        return paths


def tree_hierarchy(branching: tuple[int, ...], rng: np.random.Generator) -> Hierarchy:
    """Single-parent tree with the given branching factors below the root."""
    regions: dict[str, Region] = {}
    tier_names = [f"L{i}" for i in range(len(branching) + 1)]
    level_ids: list[list[str]] = [["R0"]]
    kids: dict[str, list[str]] = {"R0": []}
    for level, width in enumerate(branching, start=1):
        ids = []
        for parent in level_ids[level - 1]:
            for j in range(width):
                rid = f"{parent}.{j}"
                ids.append(rid)
                kids[parent].append(rid)
                kids[rid] = []
        level_ids.append(ids)

    pops: dict[str, int] = {}
    for rid in level_ids[-1]:
        pops[rid] = int(round(math.exp(rng.normal(math.log(1e5), 0.2))))
    for level in range(len(branching) - 1, -1, -1):
        for rid in level_ids[level]:
            pops[rid] = sum(pops[c] for c in kids[rid])

    for level, ids in enumerate(level_ids):
        for rid in ids:
            parent = frozenset() if level == 0 else frozenset({rid.rsplit(".", 1)[0]})
            regions[rid] = Region(id=rid, tier=tier_names[level], parents=parent, population=pops[rid])
    return build_hierarchy(regions)


def _levels(h: Hierarchy) -> list[list[str]]:
    by_tier: dict[str, list[str]] = {t: [] for t in h.tiers}
    for rid in sorted(h.regions):
        by_tier[h.regions[rid].tier].append(rid)
    return [by_tier[t] for t in h.tiers]


def generate_observations(
    h: Hierarchy, spec: SyntheticSpec, rng: np.random.Generator
) -> dict[str, np.ndarray]:
    """Per-region value arrays (NaN = missing), leaves first then aggregated up."""
    T = spec.days
    t = np.arange(T)
    weekday = 1.0 + spec.weekday_amplitude * WEEKDAY_PATTERN[t % 7]
    levels = _levels(h)
    children: dict[str, list[str]] = {rid: [] for rid in h.regions}
    for rid in sorted(h.regions):
        for p in sorted(h.regions[rid].parents):
            children[p].append(rid)

    # One shared epidemic season with a few days of per-region jitter.
    common_phase = rng.uniform(0, 2 * math.pi)
    base: dict[str, np.ndarray] = {}
    values: dict[str, np.ndarray] = {}
    rate = 1e-3
    for level_ids in reversed(levels):
        for rid in level_ids:
            kids = children[rid]
            phase = common_phase + rng.normal(0.0, 0.05)
            season = 1.0 + spec.seasonal_amplitude * np.sin(2 * math.pi * t / 365.0 + phase)
            if not kids:
                level = h.regions[rid].population * rate
                base[rid] = level * season  # weekday-free local level
                noise = 1.0 + spec.noise_scale * rng.standard_normal(T)
                values[rid] = np.maximum(base[rid] * weekday * noise, 0.0)
            else:
                total = np.sum([values[k] for k in kids], axis=0)
                base[rid] = np.sum([base[k] for k in kids], axis=0)
                noise = 1.0 + 0.5 * spec.noise_scale * rng.standard_normal(T)
                values[rid] = np.maximum(total * noise, 0.0)

    # Spikes are applied after aggregation: a data error in one stream does not
    # propagate upward, because parents arrive as their own streams. They scale
    # with the weekday-free local level.
    for o in spec.outliers:
        if o.region not in values:
            raise SpecError(f"planted outlier region {o.region!r} not in hierarchy")
        values[o.region][o.day] += o.magnitude_multiplier * base[o.region][o.day]

    protected = {(o.region, o.day) for o in spec.outliers}
    if spec.missing_rate > 0:
        for rid in sorted(values):
            drop = rng.random(T) < spec.missing_rate
            for region, day in protected:
                if region == rid:
                    drop[day] = False
            values[rid][drop] = np.nan

    member_index: dict[str, frozenset[str]] = {s.parent_id: s.members for s in h.sibling_sets}
    for outage in spec.outages:
        members = member_index.get(outage.parent_id)
        if members is None:
            raise SpecError(f"outage parent {outage.parent_id!r} has no sibling set")
        for rid in members:
            overlap = protected & {(rid, d) for d in range(outage.day_lo, outage.day_hi + 1)}
            if overlap:
                raise SpecError(f"outage on {outage.parent_id!r} overlaps planted outlier {overlap}")
            values[rid][outage.day_lo : outage.day_hi + 1] = np.nan
    return values


def generate_corpus(spec: SyntheticSpec, hierarchy: Hierarchy | None = None) -> Corpus:
    """Deterministic corpus for a spec; same seed, same bytes."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    h = hierarchy if hierarchy is not None else tree_hierarchy(spec.tier_branching, rng)
    values = generate_observations(h, spec, rng)

    epoch = dt.date.fromisoformat(spec.epoch)
    observations = []
    for rid in sorted(values):
        arr = values[rid]
        for day in range(spec.days):
            v = arr[day]
            if np.isnan(v):
                continue
            date = (epoch + dt.timedelta(days=day)).isoformat()
            observations.append((spec.indicator, rid, date, float(v), 0))

    by_magnitude = sorted(spec.outliers, key=lambda o: -o.magnitude_multiplier)
    labels = [
        GroundTruthLabel(spec.indicator, o.region, o.day, rank)
        for rank, o in enumerate(by_magnitude, start=1)
    ]
    return Corpus(spec=spec, hierarchy=h, observations=observations, labels=labels)


def load_labels_csv(path, day_of) -> list[GroundTruthLabel]:
    labels = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            if not row:
                continue
            indicator, region, date, rank = row[0], row[1], row[2], int(row[3])
            labels.append(GroundTruthLabel(indicator, region, day_of(date), rank))
    return labels


# ---------------------------------------------------------------------------
# Fixture presets


def standard_corpus_spec(seed: int = 20230401) -> SyntheticSpec:
    """The 4-tier ~450-region, 300-day corpus used by the evaluation suite.

    20 spikes with strictly increasing magnitudes sit inside a single 14-day
    span (days 230-243) so every pair shares a regime, which makes the
    planted order recoverable from regime-relative quantiles. Magnitudes are
    spaced evenly in standardized-residual units (the detector's own scale,
    which saturates at sqrt(T)), weekday modulation is off (the data model
    assumes upstream day-of-week adjustment), and outside the surge window
    [216, 257] a rotating batch of 12 leaf providers is dark every day, so
    quiet-period references are structurally smaller and the pool-size scale
    factor down-weights their regime maxima.
    """
    branching = (5, 8, 10)
    noise = 0.1
    days = 300
    rng = np.random.default_rng(seed)
    h = tree_hierarchy(branching, rng)
    leaf_sets = [s for s in h.sibling_sets if next(iter(s.members)).count(".") == 3]
    leaf_sets.sort(key=lambda s: s.parent_id)

    outliers = []
    for j in range(20):
        members = sorted(leaf_sets[j].members)
        region = members[(j * 3) % len(members)]
        day = 230 + j if j < 14 else 230 + 2 * (j - 14)
        z = 5.0 + 11.0 * j / 19.0
        magnitude = z * noise / math.sqrt(1.0 - z * z / days)
        outliers.append(PlantedOutlier(region, day, magnitude))

    surge_lo, surge_hi = 216, 257
    dark_per_day = 12
    outages = []
    for day in range(days):
        if surge_lo <= day <= surge_hi:
            continue
        for i in range(dark_per_day):
            outages.append(SetOutage(leaf_sets[(day * dark_per_day + i) % 40].parent_id, day, day))

    return SyntheticSpec(
        seed=seed,
        tier_branching=branching,
        days=days,
        seasonal_amplitude=0.3,
        noise_scale=noise,
        weekday_amplitude=0.0,
        missing_rate=0.05,
        outliers=tuple(outliers),
        outages=tuple(outages),
        indicator="synthetic_cases",
    )


def tiny_corpus_spec(seed: int = 7) -> SyntheticSpec:
    return SyntheticSpec(
        seed=seed,
        tier_branching=(3, 4),
        days=90,
        missing_rate=0.05,
        outliers=(
            PlantedOutlier("R0.0.0", 60, 10.0),
            PlantedOutlier("R0.1.1", 55, 5.0),
            PlantedOutlier("R0.2.2", 65, 2.0),
        ),
    )


def delphi_scale_hierarchy() -> Hierarchy:
    """A 4270-region, 369-sibling-set hierarchy shaped like national surveillance
    data: 1 root, 10 groups, 52 states, 306 referral regions (62 of them
    border regions with two states), 3901 localities (1519 with two parents).
    Mean sibling-set size works out to 5850/369 = 15.85.
    """
    regions: dict[str, Region] = {}
    rng = np.random.default_rng(4270)

    hhs = [f"H{i:02d}" for i in range(10)]
    state_counts = [6, 6] + [5] * 8  # 52 states over 10 groups
    states: list[str] = []
    state_parent: dict[str, str] = {}
    for gi, count in enumerate(state_counts):
        for j in range(count):
            sid = f"S{len(states):02d}"
            states.append(sid)
            state_parent[sid] = hhs[gi]

    hrrs: list[str] = []
    hrr_parents: dict[str, set[str]] = {}
    hrr_counts = [6] * 46 + [5] * 6  # 306 referral regions over 52 states
    for si, count in enumerate(hrr_counts):
        for j in range(count):
            hid = f"HRR{len(hrrs):03d}"
            hrrs.append(hid)
            hrr_parents[hid] = {states[si]}
    border = [i for i in range(306) if i % 5 == 2] + [304]  # 62 border regions
    for i in border:
        home = next(iter(hrr_parents[hrrs[i]]))
        neighbor = states[(states.index(home) + 1) % len(states)]
        hrr_parents[hrrs[i]].add(neighbor)

    counties: list[str] = []
    county_parents: dict[str, set[str]] = {}
    county_counts = [13] * 229 + [12] * 77  # 3901 localities over 306 regions
    for hi, count in enumerate(county_counts):
        for j in range(count):
            cid = f"C{len(counties):04d}"
            counties.append(cid)
            county_parents[cid] = {hrrs[hi]}
    for ci in range(1519):  # first 1519 localities sit in two referral regions
        home = next(iter(county_parents[counties[ci]]))
        neighbor = hrrs[(hrrs.index(home) + 1) % len(hrrs)]
        county_parents[counties[ci]].add(neighbor)

    pops = {cid: int(rng.integers(5_000, 250_000)) for cid in counties}

    def add(rid, tier, parents, pop):
        regions[rid] = Region(id=rid, tier=tier, parents=frozenset(parents), population=pop)

    for cid in counties:
        add(cid, "county", county_parents[cid], pops[cid])
    for hid in hrrs:
        pop = sum(pops[c] for c in counties if hid in county_parents[c])
        add(hid, "hrr", hrr_parents[hid], max(pop, 1))
    for sid in states:
        pop = sum(regions[h].population for h in hrrs if sid in hrr_parents[h])
        add(sid, "state", {state_parent[sid]}, max(pop, 1))
    for gid in hhs:
        pop = sum(regions[s].population for s in states if state_parent[s] == gid)
        add(gid, "hhs", {"US"}, max(pop, 1))
    add("US", "nation", set(), sum(regions[g].population for g in hhs))
    return build_hierarchy(regions)


def delphi_scale_spec(seed: int = 369) -> SyntheticSpec:
    return SyntheticSpec(
        seed=seed,
        tier_branching=(1,),  # unused: the prebuilt hierarchy is passed alongside
        days=300,
        missing_rate=0.02,
        indicator="synthetic_claims",
    )
