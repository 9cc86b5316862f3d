"""Builders for the bundled benchmark domains.

Three families: a synthetic one-hot grid (r attributes over r values), a PC
configurator (categorical parts, Horn compatibility rules, derived price),
and a trip planner (time-indexed route over a city graph with revisits
allowed). The PC and trip instance tables are schema-compatible scaled
stand-ins, not the datasets of any prior system.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .domain import (
    Attribute,
    Context,
    DomainSpec,
    EMPTY_CONTEXT,
    FeatureRow,
    LinearConstraint,
    categorical,
)
from .errors import SchemaError


def _instance_text(name: str) -> str:
    return resources.files("cforge.instances").joinpath(name).read_text("utf-8")


def load_instance(name_or_path: str | Path) -> dict:
    path = Path(name_or_path)
    if path.exists():
        return json.loads(path.read_text("utf-8"))
    return json.loads(_instance_text(str(name_or_path)))


def instance_checksum(name: str) -> str:
    return hashlib.sha256(_instance_text(name).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# synthetic


def build_synthetic(r: int) -> DomainSpec:
    """Cartesian product of r attributes over r values; one-hot features.

    |Y| = r^r, d = r^2, no cross-attribute constraints.
    """
    if r < 2:
        raise SchemaError(f"synthetic domain needs r >= 2, got {r}")
    values = [str(v + 1) for v in range(r)]
    attrs = [categorical(f"attr{i + 1}", values) for i in range(r)]
    features = [
        FeatureRow(f"attr{i + 1}={v}", ((f"attr{i + 1}={v}", 1.0),))
        for i in range(r)
        for v in values
    ]
    return DomainSpec(attrs, (), features, {"benchmark": "synthetic", "r": r})


# ---------------------------------------------------------------------------
# PC configurator


def build_pc(instance: str | Path | Mapping[str, Any] = "pc_parts.json") -> DomainSpec:
    """PC domain: categorical parts, Horn rules, one-hot features plus price."""
    doc = instance if isinstance(instance, Mapping) else load_instance(instance)
    attrs = []
    for name, values in doc["attributes"].items():
        attrs.append(categorical(name, values))
    by_name = {a.name: set(a.values) for a in attrs}

    constraints = []
    for rule in doc.get("horn_rules", ()):
        ante = rule["if"]
        cons_attr, cons_value = rule["then"]
        for attr, value in [*ante, [cons_attr, cons_value]]:
            if attr not in by_name or value not in by_name[attr]:
                raise SchemaError(f"horn rule references unknown part {attr}={value}")
        # A1 & ... & An => C   <=>   sum(Ai) - C <= n - 1
        terms = [(f"{attr}={value}", 1.0) for attr, value in ante]
        terms.append((f"{cons_attr}={cons_value}", -1.0))
        constraints.append(LinearConstraint(tuple(terms), "<=", float(len(ante) - 1)))

    features = [
        FeatureRow(f"{a.name}={v}", ((f"{a.name}={v}", 1.0),))
        for a in attrs
        for v in a.values
    ]
    price_terms = []
    for attr, table in doc.get("prices", {}).items():
        if attr not in by_name:
            raise SchemaError(f"price table references unknown attribute {attr!r}")
        for value, price in table.items():
            if value not in by_name[attr]:
                raise SchemaError(f"price table references unknown part {attr}={value}")
            price_terms.append((f"{attr}={value}", float(price)))
    features.append(
        FeatureRow("price", tuple(price_terms), float(doc.get("price_scale", 1.0)))
    )
    return DomainSpec(
        attrs,
        constraints,
        features,
        {"benchmark": "pc", "prices": doc.get("prices", {})},
    )


# ---------------------------------------------------------------------------
# trip planner


def build_trip(
    instance: str | Path | Mapping[str, Any] = "trip_cities.json",
    variant: str = "simplified",
) -> DomainSpec:
    """Trip domain: a route over cities encoded by per-day categorical steps.

    Each day's step is either a city or "-" (trip over). Routes may revisit
    cities; consecutive days must be the same city or an edge of the road
    graph; once the trip stops it stays stopped. Features are stay counts,
    activity-availability day counts, the trip cost and the trip length
    (plus per-day step indicators in the full-schema variant).
    """
    doc = instance if isinstance(instance, Mapping) else load_instance(instance)
    try:
        var = doc["variants"][variant]
    except KeyError:
        raise SchemaError(f"unknown trip variant {variant!r}") from None
    n_cities = var["cities"]
    n_act = var["activities"]
    horizon = var["horizon"]
    cities = [c["name"] for c in doc["cities"][:n_cities]]
    costs = {c["name"]: c["daily_cost"] for c in doc["cities"][:n_cities]}
    acts = {c["name"]: c["activities"][:n_act] for c in doc["cities"][:n_cities]}
    act_names = doc["activities"][:n_act]
    edges = {
        frozenset(e)
        for e in doc["edges"]
        if e[0] in cities and e[1] in cities
    }

    stop = "-"
    attrs = [categorical("day1", cities)]
    attrs += [categorical(f"day{t}", [stop, *cities]) for t in range(2, horizon + 1)]

    constraints = []
    for t in range(1, horizon):
        for city in cities:
            # reachable only from itself or a road-graph neighbour
            terms = [(f"day{t + 1}={city}", 1.0), (f"day{t}={city}", -1.0)]
            for other in cities:
                if other != city and frozenset((other, city)) in edges:
                    terms.append((f"day{t}={other}", -1.0))
            constraints.append(LinearConstraint(tuple(terms), "<=", 0.0))
        if t >= 2:
            # once stopped, stay stopped
            constraints.append(
                LinearConstraint(
                    ((f"day{t + 1}={stop}", 1.0), (f"day{t}={stop}", -1.0)), ">=", 0.0
                )
            )

    def stay_terms(city: str) -> tuple[tuple[str, float], ...]:
        return tuple((f"day{t}={city}", 1.0) for t in range(1, horizon + 1))

    features = [FeatureRow(f"stay:{c}", stay_terms(c)) for c in cities]
    for a_idx, act in enumerate(act_names):
        terms = []
        for c in cities:
            if acts[c][a_idx]:
                terms.extend(stay_terms(c))
        features.append(FeatureRow(f"activity:{act}", tuple(terms)))
    if var.get("step_features"):
        features.extend(
            FeatureRow(f"at:day{t}:{c}", ((f"day{t}={c}", 1.0),))
            for t in range(1, horizon + 1)
            for c in cities
        )
    cost_terms = tuple(
        (f"day{t}={c}", float(costs[c]))
        for t in range(1, horizon + 1)
        for c in cities
    )
    features.append(FeatureRow("cost", cost_terms))
    total_terms = tuple(
        (f"day{t}={c}", 1.0) for t in range(1, horizon + 1) for c in cities
    )
    features.append(FeatureRow("days", total_terms))

    return DomainSpec(
        attrs,
        constraints,
        features,
        {
            "benchmark": "trip",
            "variant": variant,
            "contextual": True,
            "cities": cities,
            "horizon": horizon,
        },
    )


def must_visit_context(spec: DomainSpec, cities: list[str]) -> Context:
    """Context forcing every listed city to appear in the route."""
    known = spec.metadata.get("cities", [])
    horizon = spec.metadata.get("horizon")
    for c in cities:
        if c not in known:
            raise SchemaError(f"unknown city {c!r}")
    rows = tuple(
        LinearConstraint(
            tuple((f"day{t}={c}", 1.0) for t in range(1, horizon + 1)), ">=", 1.0
        )
        for c in cities
    )
    return Context(constraints=rows, label="must-visit:" + "+".join(cities))


def sample_context(spec: DomainSpec, rng: np.random.Generator) -> Context:
    """Uniform draw over must-visit subsets of 2 or 3 cities (contextual
    domains); context-less domains yield the empty context."""
    if not spec.metadata.get("contextual"):
        return EMPTY_CONTEXT
    cities = spec.metadata["cities"]
    subsets = [list(c) for c in itertools.combinations(cities, 2)]
    subsets += [list(c) for c in itertools.combinations(cities, 3)]
    pick = subsets[int(rng.integers(len(subsets)))]
    return must_visit_context(spec, pick)


BUILDERS = {
    "synthetic": build_synthetic,
    "pc": build_pc,
    "trip": build_trip,
}
