"""Benchmark domain builders: synthetic grid, PC configurator, trip planner."""

import hashlib
import itertools
from pathlib import Path

import numpy as np
import pytest

from cforge.benchmarks import (
    build_pc,
    build_synthetic,
    build_trip,
    instance_checksum,
    load_instance,
    must_visit_context,
    sample_context,
)
from cforge.domain import EMPTY_CONTEXT
from cforge.errors import SchemaError


# ---------------------------------------------------------------------------
# synthetic


def test_synthetic_sizes():
    spec = build_synthetic(4)
    assert spec.d == 16
    assert sum(1 for _ in spec.enumerate()) == 256
    spec2 = build_synthetic(2)
    assert spec2.d == 4
    assert sum(1 for _ in spec2.enumerate()) == 4
    with pytest.raises(SchemaError):
        build_synthetic(1)


def test_synthetic_one_hot_blocks():
    spec = build_synthetic(3)
    for y in spec.enumerate():
        phi = spec.featurize(EMPTY_CONTEXT, y)
        for block in range(3):
            assert phi[3 * block : 3 * block + 3].sum() == 1.0


# ---------------------------------------------------------------------------
# pc


@pytest.fixture(scope="module")
def pc():
    return build_pc()


def test_pc_horn_rules_hold_on_all_products(pc):
    doc = load_instance("pc_parts.json")
    rules = doc["horn_rules"]
    count = 0
    for y in pc.enumerate(limit=10**6):
        vals = y.as_dict()
        for rule in rules:
            if all(vals[a] == v for a, v in rule["if"]):
                a, v = rule["then"]
                assert vals[a] == v
        count += 1
    # independent nested-loop count with rule filtering
    attrs = doc["attributes"]
    brute = 0
    for combo in itertools.product(*attrs.values()):
        vals = dict(zip(attrs.keys(), combo))
        ok = all(
            not all(vals[a] == v for a, v in rule["if"]) or vals[rule["then"][0]] == rule["then"][1]
            for rule in rules
        )
        brute += ok
    assert count == brute
    assert count < np.prod([len(v) for v in attrs.values()])


def test_pc_no_rules_full_product():
    doc = dict(load_instance("pc_parts.json"))
    doc["horn_rules"] = []
    spec = build_pc(doc)
    raw = int(np.prod([len(v) for v in doc["attributes"].values()]))
    assert sum(1 for _ in spec.enumerate(limit=10**6)) == raw


def test_pc_dangling_reference_rejected():
    doc = dict(load_instance("pc_parts.json"))
    doc = {**doc, "horn_rules": [{"if": [["cpu", "ghost"]], "then": ["ram", doc["attributes"]["ram"][0]]}]}
    with pytest.raises(SchemaError):
        build_pc(doc)


# ---------------------------------------------------------------------------
# trip


@pytest.fixture(scope="module")
def trip():
    return build_trip()


def _route(y, horizon):
    steps = [y[f"day{t}"] for t in range(1, horizon + 1)]
    return steps


def _valid_route(steps, cities, edges):
    """Independent feasibility oracle written as plain loops."""
    if steps[0] not in cities:
        return False
    stopped = False
    for prev, cur in zip(steps, steps[1:]):
        if cur == "-":
            stopped = True
            continue
        if stopped:
            return False  # resumed after stopping
        if prev == "-":
            return False
        if cur != prev and frozenset((prev, cur)) not in edges:
            return False
    return True


def test_trip_enumeration_matches_route_oracle(trip):
    doc = load_instance("trip_cities.json")
    cities = trip.metadata["cities"]
    horizon = trip.metadata["horizon"]
    edges = {
        frozenset(e) for e in doc["edges"] if e[0] in cities and e[1] in cities
    }
    enumerated = {tuple(_route(y, horizon)) for y in trip.enumerate()}
    brute = set()
    for steps in itertools.product(*([cities] + [["-"] + cities] * (horizon - 1))):
        if _valid_route(list(steps), set(cities), edges):
            brute.add(steps)
    assert enumerated == brute
    assert len(enumerated) == 340


def test_trip_cost_and_stay_features(trip):
    doc = load_instance("trip_cities.json")
    costs = {c["name"]: c["daily_cost"] for c in doc["cities"]}
    names = [f.name for f in trip.features]
    horizon = trip.metadata["horizon"]
    for y in itertools.islice(trip.enumerate(), 50):
        phi = trip.featurize(EMPTY_CONTEXT, y)
        steps = [s for s in _route(y, horizon) if s != "-"]
        assert phi[names.index("cost")] == sum(costs[s] for s in steps)
        assert phi[names.index("days")] == len(steps)
        for c in trip.metadata["cities"]:
            assert phi[names.index(f"stay:{c}")] == steps.count(c)


def test_trip_full_schema_dimension():
    full = build_trip(variant="full-schema")
    assert full.d == 127


def test_must_visit_context(trip):
    cities = trip.metadata["cities"]
    x = must_visit_context(trip, cities[:2])
    horizon = trip.metadata["horizon"]
    for y in trip.enumerate(x):
        steps = _route(y, horizon)
        assert cities[0] in steps and cities[1] in steps
    with pytest.raises(SchemaError):
        must_visit_context(trip, ["atlantis"])


def test_sample_context_sizes(trip):
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = sample_context(trip, rng)
        assert x.label.startswith("must-visit:")
        assert len(x.label.split(":")[1].split("+")) in (2, 3)
    # context-less domain -> empty context
    assert sample_context(build_synthetic(3), rng).is_empty()


def test_sample_context_deterministic(trip):
    rng1 = np.random.default_rng(4)
    rng2 = np.random.default_rng(4)
    assert [sample_context(trip, rng1).label for _ in range(5)] == [
        sample_context(trip, rng2).label for _ in range(5)
    ]


def test_unknown_variant_rejected():
    with pytest.raises(SchemaError):
        build_trip(variant="imaginary")


# ---------------------------------------------------------------------------
# instance integrity


def test_instance_checksums():
    from importlib import resources

    listed = {}
    text = resources.files("cforge.instances").joinpath("CHECKSUMS.sha256").read_text()
    for line in text.strip().splitlines():
        digest, name = line.split()
        listed[name] = digest
    assert set(listed) == {"pc_parts.json", "trip_cities.json"}
    for name, digest in listed.items():
        assert instance_checksum(name) == digest


def test_load_instance_from_path(tmp_path):
    doc = load_instance("pc_parts.json")
    p = tmp_path / "copy.json"
    import json

    p.write_text(json.dumps(doc))
    assert load_instance(p) == doc
