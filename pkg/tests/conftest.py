import numpy as np
import pytest

import streamrank as sr
from streamrank.hierarchy import Region, build_hierarchy
from streamrank.store import OBSERVATION_HEADER

TWO_STATE_CSV = """region_id,tier,parent_ids,population
US,nation,,1000000
DE,state,US,600000
MD,state,US,400000
112,hrr,DE|MD,150000
225,hrr,DE|MD,120000
300,hrr,DE,330000
301,hrr,MD,280000
"""


@pytest.fixture
def two_state_hierarchy():
    return sr.load_hierarchy(TWO_STATE_CSV)


@pytest.fixture
def flat_hierarchy():
    """One root with three states; the smallest useful ranking fixture."""
    return sr.load_hierarchy(
        "region_id,tier,parent_ids,population\n"
        "US,nation,,1000000\n"
        "A,state,US,300000\n"
        "B,state,US,300000\n"
        "C,state,US,400000\n"
    )


def observations_csv(rows):
    """rows: (indicator, region, iso_date, value, rev) tuples -> CSV text."""
    lines = [",".join(OBSERVATION_HEADER)]
    for indicator, region, date, value, rev in rows:
        lines.append(f"{indicator},{region},{date},{value},{rev}")
    return "\n".join(lines) + "\n"


def store_from_corpus(corpus):
    """Load a generated corpus into a fresh in-memory store."""
    store = sr.StreamStore(corpus.hierarchy)
    lines = [",".join(OBSERVATION_HEADER)]
    for indicator, region, date, value, rev in corpus.observations:
        lines.append(f"{indicator},{region},{date},{value!r},{rev}")
    report = store.ingest("\n".join(lines) + "\n")
    assert report.rejects == 0
    return store


def make_stream(values, indicator="i", region="r", start=0):
    """Stream from a list of values; None marks a gap."""
    days, vals = [], []
    for offset, v in enumerate(values):
        if v is None:
            continue
        days.append(start + offset)
        vals.append(float(v))
    return sr.Stream(indicator, region, np.array(days, dtype=np.int64), np.array(vals))


def surface_from_map(surface_map, indicator="i", detector_id="test"):
    """PhiSurface from {region: {day: phi}}."""
    day_lo = min(min(d) for d in surface_map.values())
    day_hi = max(max(d) for d in surface_map.values())
    surface = sr.PhiSurface(indicator, detector_id, day_lo, day_hi)
    for region, per_day in surface_map.items():
        arr = np.full(day_hi - day_lo + 1, np.nan)
        for day, phi in per_day.items():
            arr[day - day_lo] = phi
        surface.phi[region] = arr
        surface.evaluated[region] = ~np.isnan(arr)
    return surface


@pytest.fixture(scope="session")
def standard_corpus():
    from streamrank.synth import generate_corpus, standard_corpus_spec

    return generate_corpus(standard_corpus_spec())


@pytest.fixture(scope="session")
def standard_store(standard_corpus):
    return store_from_corpus(standard_corpus)


@pytest.fixture(scope="session")
def standard_surface(standard_corpus, standard_store):
    return sr.compute_surface(
        standard_store, standard_corpus.hierarchy, standard_corpus.spec.indicator, sr.EwmaDetector()
    )


def random_hierarchy(rng):
    """Random 3-tier hierarchy, occasionally multi-parent, <= 20 regions."""
    n_states = int(rng.integers(2, 5))
    regions = {"US": Region("US", "nation", frozenset(), 10**6)}
    states = [f"S{i}" for i in range(n_states)]
    for s in states:
        regions[s] = Region(s, "state", frozenset({"US"}), int(rng.integers(10**4, 10**6)))
    n_leaves = int(rng.integers(2, 15))
    for i in range(n_leaves):
        home = states[int(rng.integers(0, n_states))]
        parents = {home}
        if n_states > 1 and rng.random() < 0.25:
            other = states[(states.index(home) + 1) % n_states]
            parents.add(other)
        regions[f"L{i}"] = Region(f"L{i}", "leaf", frozenset(parents), int(rng.integers(10**3, 10**5)))
    return build_hierarchy(regions)


def random_surface_map(h, rng, days, missing_rate):
    surface_map = {}
    for region in h.regions:
        per_day = {}
        for d in range(days):
            if rng.random() >= missing_rate:
                per_day[d] = float(rng.random() * 100)
        if per_day:
            surface_map[region] = per_day
    return surface_map


def oracle_sets(h):
    return [sorted(s.members) for s in h.sibling_sets]
