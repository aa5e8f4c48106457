"""Multi-tier region hierarchy and derived sibling sets.

The hierarchy is loaded once from a CSV edge list and never mutated, so it is
safe to share across any number of worker threads. Tier names are plain data:
the file declares whatever levels it likes, and only the parent/child
structure matters to the ranking machinery.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .errors import ParseError, UnknownRegion, ValidationError

HIERARCHY_HEADER = ["region_id", "tier", "parent_ids", "population"]


@dataclass(frozen=True)
class Region:
    id: str
    tier: str
    parents: frozenset[str]
    population: int


@dataclass(frozen=True)
class SiblingSet:
    """All regions sharing the parent `parent_id` (one tier below it)."""

    parent_id: str
    members: frozenset[str]


@dataclass(frozen=True)
class RegionContext:
    parents: frozenset[str]
    siblings: frozenset[str]
    children: frozenset[str]


@dataclass(frozen=True)
class Hierarchy:
    regions: dict[str, Region]
    tiers: tuple[str, ...]
    sibling_sets: tuple[SiblingSet, ...] = field(default=())

    @property
    def root_id(self) -> str:
        return next(r.id for r in self.regions.values() if not r.parents)

    def region(self, region_id: str) -> Region:
        try:
            return self.regions[region_id]
        except KeyError:
            raise UnknownRegion(f"unknown region {region_id!r}") from None

    def children_of(self, region_id: str) -> frozenset[str]:
        self.region(region_id)
        return frozenset(
            r.id for r in self.regions.values() if region_id in r.parents
        )


def load_hierarchy(source: str) -> Hierarchy:
    """Parse and validate the CSV edge-list format.

    Header is `region_id,tier,parent_ids,population`; parent_ids is a
    `|`-separated list, empty only for the single root row. Rejects cycles,
    orphan parents, tier skips, and populations below 1.
    """
    reader = csv.reader(io.StringIO(source))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty hierarchy file") from None
    if [h.strip() for h in header] != HIERARCHY_HEADER:
        raise ParseError(f"expected header {','.join(HIERARCHY_HEADER)!r}, got {','.join(header)!r}")

    regions: dict[str, Region] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 columns, got {len(row)}", line=lineno)
        region_id, tier, parent_ids, population = (c.strip() for c in row)
        if not region_id:
            raise ParseError("empty region_id", line=lineno)
        if not tier:
            raise ParseError("empty tier", line=lineno)
        if region_id in regions:
            raise ParseError(f"duplicate region {region_id!r}", line=lineno)
        try:
            pop = int(population)
        except ValueError:
            raise ParseError(f"population {population!r} is not an integer", line=lineno) from None
        parents = frozenset(p.strip() for p in parent_ids.split("|") if p.strip())
        regions[region_id] = Region(id=region_id, tier=tier, parents=parents, population=pop)

    return build_hierarchy(regions)


def load_hierarchy_path(path) -> Hierarchy:
    with open(path, encoding="utf-8") as fh:
        return load_hierarchy(fh.read())


def build_hierarchy(regions: dict[str, Region]) -> Hierarchy:
    """Validate a region map and derive tiers and sibling sets."""
    if not regions:
        raise ValidationError("hierarchy has no regions")
    for r in regions.values():
        if r.population < 1:
            raise ValidationError(f"region {r.id!r} has population {r.population} < 1")
        for p in r.parents:
            if p not in regions:
                raise ValidationError(f"region {r.id!r} references missing parent {p!r}")
            if p == r.id:
                raise ValidationError(f"region {r.id!r} is its own parent")

    roots = [r.id for r in regions.values() if not r.parents]
    if len(roots) != 1:
        raise ValidationError(f"expected exactly one root region, found {len(roots)}: {sorted(roots)[:5]}")
    root = roots[0]

    children_index: dict[str, list[str]] = {}
    for r in regions.values():
        for p in r.parents:
            children_index.setdefault(p, []).append(r.id)

    # Level assignment doubles as cycle detection: a region on a cycle never
    # has all of its parents resolved.
    levels: dict[str, int] = {root: 0}
    frontier = [root]
    while frontier:
        next_frontier = []
        for rid in frontier:
            for cid in children_index.get(rid, []):
                if cid in levels:
                    continue
                parent_levels = [levels.get(p) for p in regions[cid].parents]
                if None in parent_levels:
                    continue  # revisited when the last parent is levelled
                levels[cid] = max(parent_levels) + 1
                next_frontier.append(cid)
        frontier = next_frontier

    unlevelled = set(regions) - set(levels)
    if unlevelled:
        sample = sorted(unlevelled)[:5]
        raise ValidationError(f"cycle or unreachable regions detected: {sample}")

    for r in regions.values():
        parent_levels = {levels[p] for p in r.parents}
        if r.parents and parent_levels != {levels[r.id] - 1}:
            raise ValidationError(
                f"region {r.id!r} has parents on tiers {sorted(parent_levels)}, "
                f"expected all on tier {levels[r.id] - 1}"
            )

    tier_by_level: dict[int, str] = {}
    for r in regions.values():
        level = levels[r.id]
        seen = tier_by_level.setdefault(level, r.tier)
        if seen != r.tier:
            raise ValidationError(
                f"tier names disagree on level {level}: {seen!r} vs {r.tier!r} (region {r.id!r})"
            )
    tier_levels = {}
    for level, name in tier_by_level.items():
        if name in tier_levels:
            raise ValidationError(f"tier name {name!r} appears on two levels")
        tier_levels[name] = level
    tiers = tuple(tier_by_level[level] for level in sorted(tier_by_level))

    h = Hierarchy(regions=dict(regions), tiers=tiers)
    object.__setattr__(h, "sibling_sets", tuple(derive_sibling_sets(regions)))
    return h


def derive_sibling_sets(regions: dict[str, Region]) -> list[SiblingSet]:
    members_by_parent: dict[str, set[str]] = {}
    for r in regions.values():
        for p in r.parents:
            members_by_parent.setdefault(p, set()).add(r.id)
    return [
        SiblingSet(parent_id=pid, members=frozenset(members))
        for pid, members in sorted(members_by_parent.items())
    ]


def sibling_sets(h: Hierarchy) -> list[SiblingSet]:
    """Sibling sets sorted by parent id; one per region with children."""
    return list(h.sibling_sets)


def context_of(h: Hierarchy, region_id: str) -> RegionContext:
    """Parents, siblings (sharing any parent, excluding the region), children."""
    r = h.region(region_id)
    siblings: set[str] = set()
    for s in h.sibling_sets:
        if region_id in s.members:
            siblings |= s.members
    siblings.discard(region_id)
    return RegionContext(
        parents=r.parents,
        siblings=frozenset(siblings),
        children=h.children_of(region_id),
    )


def write_hierarchy_csv(h: Hierarchy, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HIERARCHY_HEADER)
        for rid in sorted(h.regions):
            r = h.regions[rid]
            writer.writerow([r.id, r.tier, "|".join(sorted(r.parents)), r.population])
