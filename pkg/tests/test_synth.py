import numpy as np
import pytest

import streamrank as sr
from streamrank.errors import SpecError
from streamrank.synth import (
    PlantedOutlier,
    SetOutage,
    SyntheticSpec,
    generate_corpus,
    tiny_corpus_spec,
)

from conftest import store_from_corpus


def test_fixed_seed_is_byte_identical(tmp_path):
    a = generate_corpus(tiny_corpus_spec())
    b = generate_corpus(tiny_corpus_spec())
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    pa = a.write(tmp_path / "a")
    pb = b.write(tmp_path / "b")
    for kind in pa:
        assert open(pa[kind], "rb").read() == open(pb[kind], "rb").read()


def test_missing_rate_within_binomial_tolerance():
    spec = SyntheticSpec(seed=3, tier_branching=(10, 10), days=1000, missing_rate=0.1)
    corpus = generate_corpus(spec)
    total = len(corpus.hierarchy.regions) * spec.days
    present = len(corpus.observations)
    missing = total - present
    expected = total * spec.missing_rate
    sigma = (total * 0.1 * 0.9) ** 0.5
    assert abs(missing - expected) < 5 * sigma


def test_ground_truth_ranks_follow_magnitudes():
    corpus = generate_corpus(tiny_corpus_spec())
    by_rank = {lab.rank: lab.region for lab in corpus.labels}
    assert by_rank[1] == "R0.0.0"  # multiplier 10
    assert by_rank[2] == "R0.1.1"  # multiplier 5
    assert by_rank[3] == "R0.2.2"  # multiplier 2


def test_spec_rejects_duplicate_positions():
    with pytest.raises(SpecError):
        SyntheticSpec(
            seed=1,
            tier_branching=(2, 2),
            days=30,
            outliers=(PlantedOutlier("R0.0.0", 5, 2.0), PlantedOutlier("R0.0.0", 5, 3.0)),
        ).validate()


def test_spec_rejects_duplicate_magnitudes():
    with pytest.raises(SpecError):
        SyntheticSpec(
            seed=1,
            tier_branching=(2, 2),
            days=30,
            outliers=(PlantedOutlier("R0.0.0", 5, 2.0), PlantedOutlier("R0.0.1", 9, 2.0)),
        ).validate()


def test_spec_rejects_empty_branching():
    with pytest.raises(SpecError):
        SyntheticSpec(seed=1, tier_branching=(), days=30).validate()


def test_spec_rejects_outage_over_planted_outlier():
    spec = SyntheticSpec(
        seed=1,
        tier_branching=(2, 2),
        days=30,
        outliers=(PlantedOutlier("R0.0.0", 5, 2.0),),
        outages=(SetOutage("R0.0", 4, 6),),
    )
    with pytest.raises(SpecError):
        generate_corpus(spec)


def test_outage_blanks_every_member():
    spec = SyntheticSpec(
        seed=2, tier_branching=(2, 3), days=30, outages=(SetOutage("R0.1", 10, 12),)
    )
    corpus = generate_corpus(spec)
    dark = {(r, d) for _, r, d, _, _ in (
        (o[0], o[1], (np.datetime64(o[2]) - np.datetime64(spec.epoch)).astype(int), o[3], o[4])
        for o in corpus.observations
    )}
    for member in ("R0.1.0", "R0.1.1", "R0.1.2"):
        for day in (10, 11, 12):
            assert (member, day) not in dark


def test_children_sum_approximately_to_parents():
    spec = SyntheticSpec(seed=5, tier_branching=(3, 4), days=60)
    corpus = generate_corpus(spec)
    store = store_from_corpus(corpus)
    parent = store.stream(spec.indicator, "R0.1")
    kids = [store.stream(spec.indicator, f"R0.1.{j}") for j in range(4)]
    ratio = parent.values / np.sum([k.values for k in kids], axis=0)
    assert np.all(np.abs(ratio - 1.0) < 0.5)  # close
    assert not np.allclose(ratio, 1.0, atol=1e-9)  # but never exact


def test_noise_free_spike_phi_orders_by_magnitude_within_stream():
    # Sanity anchor: in one stream with zero noise, the bigger planted spike
    # carries the bigger EWMA phi.
    spec = SyntheticSpec(
        seed=6,
        tier_branching=(2, 2),
        days=300,
        noise_scale=0.0,
        seasonal_amplitude=0.2,
        weekday_amplitude=0.0,
        missing_rate=0.0,
        outliers=(
            PlantedOutlier("R0.0.0", 80, 8.0),
            PlantedOutlier("R0.0.0", 160, 4.0),
            PlantedOutlier("R0.0.0", 240, 2.0),
        ),
    )
    corpus = generate_corpus(spec)
    store = store_from_corpus(corpus)
    surface = sr.compute_surface(store, corpus.hierarchy, spec.indicator, sr.EwmaDetector())
    phis = {d: surface.phi_at("R0.0.0", d) for d in (80, 160, 240)}
    assert phis[80] > phis[160] > phis[240]


def test_standard_corpus_shape(standard_corpus):
    spec = standard_corpus.spec
    h = standard_corpus.hierarchy
    assert len(h.tiers) == 4
    assert len(h.regions) == 1 + 5 + 40 + 400
    assert spec.days == 300
    assert len(spec.outliers) == 20
    days = [o.day for o in spec.outliers]
    assert max(days) - min(days) <= 14  # every spike pair shares a regime
    mags = sorted(o.magnitude_multiplier for o in spec.outliers)
    assert all(b > a for a, b in zip(mags, mags[1:]))
    # spikes sit in distinct sibling sets
    spike_sets = set()
    for o in spec.outliers:
        for s in h.sibling_sets:
            if o.region in s.members:
                spike_sets.add(s.parent_id)
    assert len(spike_sets) == 20
