"""Hybrid combinatorial product spaces with linear features and constraints.

A domain is a set of typed attributes, a list of linear feasibility
constraints over the attribute encoding, and a linear feature map.
Categorical and boolean attributes are one-hot encoded into binary
indicator variables named ``attr=value`` (booleans use the bare attribute
name); numeric attributes enter the encoding as themselves.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionError,
    EnumerationLimitError,
    NonEnumerableDomainError,
    SchemaError,
)

FEASIBILITY_TOL = 1e-9

BOOLEAN = "boolean"
CATEGORICAL = "categorical"
INTEGER = "integer"
CONTINUOUS = "continuous"

_KINDS = (BOOLEAN, CATEGORICAL, INTEGER, CONTINUOUS)


@dataclass(frozen=True)
class Attribute:
    """One typed attribute of a configuration."""

    name: str
    kind: str
    values: tuple[str, ...] = ()
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise SchemaError(f"unknown attribute kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if len(self.values) < 2:
                raise SchemaError(
                    f"categorical attribute {self.name!r} needs >= 2 values"
                )
            if len(set(self.values)) != len(self.values):
                raise SchemaError(f"duplicate values in attribute {self.name!r}")
        if self.kind in (INTEGER, CONTINUOUS):
            if self.lo is None or self.hi is None:
                raise SchemaError(f"attribute {self.name!r} needs lo/hi bounds")
            if self.lo > self.hi:
                raise SchemaError(f"attribute {self.name!r} has lo > hi")

    def encoding_vars(self) -> list[str]:
        """Names of the encoding variables representing this attribute."""
        if self.kind == BOOLEAN:
            return [self.name]
        if self.kind == CATEGORICAL:
            return [f"{self.name}={v}" for v in self.values]
        return [self.name]

    def domain_size(self) -> int | None:
        """Number of distinct values, or None if continuous."""
        if self.kind == BOOLEAN:
            return 2
        if self.kind == CATEGORICAL:
            return len(self.values)
        if self.kind == INTEGER:
            return int(self.hi) - int(self.lo) + 1
        return None

    def iter_values(self) -> Iterator[Any]:
        if self.kind == BOOLEAN:
            yield from (False, True)
        elif self.kind == CATEGORICAL:
            yield from self.values
        elif self.kind == INTEGER:
            yield from range(int(self.lo), int(self.hi) + 1)
        else:
            raise NonEnumerableDomainError(
                f"continuous attribute {self.name!r} is not enumerable"
            )

    def check_value(self, value: Any) -> Any:
        if self.kind == BOOLEAN:
            if not isinstance(value, bool):
                raise SchemaError(f"{self.name}: expected bool, got {value!r}")
            return value
        if self.kind == CATEGORICAL:
            if value not in self.values:
                raise SchemaError(f"{self.name}: {value!r} not in domain")
            return value
        if self.kind == INTEGER:
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise SchemaError(f"{self.name}: expected int, got {value!r}")
            if not (self.lo <= value <= self.hi):
                raise SchemaError(f"{self.name}: {value!r} out of bounds")
            return int(value)
        value = float(value)
        if not (self.lo - FEASIBILITY_TOL <= value <= self.hi + FEASIBILITY_TOL):
            raise SchemaError(f"{self.name}: {value!r} out of bounds")
        return value


def boolean(name: str) -> Attribute:
    return Attribute(name, BOOLEAN)


def categorical(name: str, values: Sequence[str]) -> Attribute:
    return Attribute(name, CATEGORICAL, tuple(values))


def integer(name: str, lo: int, hi: int) -> Attribute:
    return Attribute(name, INTEGER, lo=lo, hi=hi)


def continuous(name: str, lo: float, hi: float) -> Attribute:
    return Attribute(name, CONTINUOUS, lo=lo, hi=hi)


@dataclass(frozen=True)
class LinearConstraint:
    """Linear (in)equality over encoding variables: sum(coef * var) op rhs."""

    terms: tuple[tuple[str, float], ...]
    op: str
    rhs: float

    def __post_init__(self) -> None:
        if self.op not in ("<=", "=", ">="):
            raise SchemaError(f"bad comparator {self.op!r}")

    def evaluate(self, values: Mapping[str, float]) -> float:
        try:
            return sum(c * values[v] for v, c in self.terms)
        except KeyError as exc:
            raise SchemaError(f"unknown encoding variable {exc.args[0]!r}") from exc

    def holds(self, values: Mapping[str, float], tol: float = FEASIBILITY_TOL) -> bool:
        lhs = self.evaluate(values)
        if self.op == "<=":
            return lhs <= self.rhs + tol
        if self.op == ">=":
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol


@dataclass(frozen=True)
class FeatureRow:
    """One feature: a linear expression over encoding variables, optionally
    divided by a declared scale."""

    name: str
    terms: tuple[tuple[str, float], ...]
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise SchemaError(f"feature {self.name!r}: scale must be positive")

    def evaluate(self, values: Mapping[str, float]) -> float:
        try:
            return sum(c * values[v] for v, c in self.terms) / self.scale
        except KeyError as exc:
            raise SchemaError(f"unknown encoding variable {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class Configuration:
    """A full, type-conforming assignment to the attributes of a schema."""

    values: tuple[tuple[str, Any], ...]

    def __getitem__(self, name: str) -> Any:
        for k, v in self.values:
            if k == name:
                return v
        raise KeyError(name)

    def as_dict(self) -> dict[str, Any]:
        return dict(self.values)


@dataclass(frozen=True)
class Context:
    """Per-iteration context: fixed attribute assignments and/or extra
    constraints activated for one query."""

    fixed: tuple[tuple[str, Any], ...] = ()
    constraints: tuple[LinearConstraint, ...] = ()
    label: str | None = None

    @staticmethod
    def empty() -> "Context":
        return Context()

    def is_empty(self) -> bool:
        return not self.fixed and not self.constraints


EMPTY_CONTEXT = Context()


class DomainSpec:
    """Attribute schema + feasibility constraints + linear feature map.

    Immutable after construction; safe to share across sessions.
    """

    def __init__(
        self,
        attributes: Sequence[Attribute],
        constraints: Sequence[LinearConstraint] = (),
        features: Sequence[FeatureRow] = (),
        metadata: Mapping[str, Any] | None = None,
    ) -> None:
        names = [a.name for a in attributes]
        if len(set(names)) != len(names):
            raise SchemaError("attribute names must be unique")
        self.attributes: tuple[Attribute, ...] = tuple(attributes)
        self.constraints: tuple[LinearConstraint, ...] = tuple(constraints)
        self.features: tuple[FeatureRow, ...] = tuple(features)
        self.metadata: dict[str, Any] = dict(metadata or {})
        self._by_name = {a.name: a for a in self.attributes}
        self._enc_vars: list[str] = []
        for a in self.attributes:
            self._enc_vars.extend(a.encoding_vars())
        enc = set(self._enc_vars)
        for c in self.constraints:
            for v, _ in c.terms:
                if v not in enc:
                    raise SchemaError(f"constraint references unknown variable {v!r}")
        for f in self.features:
            for v, _ in f.terms:
                if v not in enc:
                    raise SchemaError(
                        f"feature {f.name!r} references unknown variable {v!r}"
                    )
        self._radius: float | None = None

    # -- schema ----------------------------------------------------------

    @property
    def d(self) -> int:
        return len(self.features)

    def attribute(self, name: str) -> Attribute:
        try:
            return self._by_name[name]
        except KeyError:
            raise SchemaError(f"unknown attribute {name!r}") from None

    def encoding_variables(self) -> list[str]:
        return list(self._enc_vars)

    def encoding_bounds(self) -> dict[str, tuple[str, float, float]]:
        """Map encoding variable -> (kind, lo, hi) for solver consumption."""
        out: dict[str, tuple[str, float, float]] = {}
        for a in self.attributes:
            if a.kind in (BOOLEAN, CATEGORICAL):
                for v in a.encoding_vars():
                    out[v] = ("binary", 0.0, 1.0)
            elif a.kind == INTEGER:
                out[a.name] = ("integer", float(a.lo), float(a.hi))
            else:
                out[a.name] = ("continuous", float(a.lo), float(a.hi))
        return out

    def structural_constraints(self) -> list[LinearConstraint]:
        """One-hot exactly-one rows for categorical attributes."""
        rows = []
        for a in self.attributes:
            if a.kind == CATEGORICAL:
                rows.append(
                    LinearConstraint(
                        tuple((v, 1.0) for v in a.encoding_vars()), "=", 1.0
                    )
                )
        return rows

    # -- configurations --------------------------------------------------

    def configuration(self, assignment: Mapping[str, Any]) -> Configuration:
        extra = set(assignment) - set(self._by_name)
        if extra:
            raise SchemaError(f"unknown attributes {sorted(extra)!r}")
        vals = []
        for a in self.attributes:
            if a.name not in assignment:
                raise SchemaError(f"missing attribute {a.name!r}")
            vals.append((a.name, a.check_value(assignment[a.name])))
        return Configuration(tuple(vals))

    def encode(self, y: Configuration) -> dict[str, float]:
        """Encoding-variable values for a configuration."""
        out: dict[str, float] = {}
        for name, value in y.values:
            a = self._by_name[name]
            if a.kind == BOOLEAN:
                out[name] = 1.0 if value else 0.0
            elif a.kind == CATEGORICAL:
                for v in a.values:
                    out[f"{name}={v}"] = 1.0 if v == value else 0.0
            else:
                out[name] = float(value)
        return out

    def context_constraints(self, x: Context) -> list[LinearConstraint]:
        """Context fixed assignments and extra constraints as linear rows."""
        rows: list[LinearConstraint] = []
        for name, value in x.fixed:
            a = self.attribute(name)
            if a.kind == BOOLEAN:
                rows.append(LinearConstraint(((name, 1.0),), "=", 1.0 if value else 0.0))
            elif a.kind == CATEGORICAL:
                if value not in a.values:
                    raise SchemaError(f"{name}: {value!r} not in domain")
                rows.append(LinearConstraint(((f"{name}={value}", 1.0),), "=", 1.0))
            else:
                rows.append(LinearConstraint(((name, 1.0),), "=", float(value)))
        rows.extend(x.constraints)
        return rows

    # -- operations ------------------------------------------------------

    def featurize(self, x: Context, y: Configuration) -> np.ndarray:
        """Feature vector phi(x, y); deterministic in (x, y)."""
        enc = self.encode(y)
        return np.array([f.evaluate(enc) for f in self.features], dtype=float)

    def utility(self, w: np.ndarray, phi: np.ndarray) -> float:
        w = np.asarray(w, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if w.shape != (self.d,) or phi.shape != (self.d,):
            raise DimensionError(
                f"expected vectors of length {self.d}, got {w.shape} and {phi.shape}"
            )
        return float(np.dot(w, phi))

    def feasible(self, x: Context, y: Configuration) -> bool:
        enc = self.encode(y)
        for c in self.constraints:
            if not c.holds(enc):
                return False
        for c in self.context_constraints(x):
            if not c.holds(enc):
                return False
        return True

    def enumerable_size(self) -> int | None:
        """Raw assignment count (before feasibility), or None if continuous."""
        total = 1
        for a in self.attributes:
            n = a.domain_size()
            if n is None:
                return None
            total *= n
        return total

    def enumerate(
        self, x: Context = EMPTY_CONTEXT, limit: int = 1_000_000
    ) -> Iterator[Configuration]:
        """Yield every feasible configuration exactly once, in a fixed order."""
        raw = self.enumerable_size()
        if raw is None:
            raise NonEnumerableDomainError("domain has continuous attributes")
        if raw > limit:
            raise EnumerationLimitError(f"{raw} assignments exceed limit {limit}")
        pools = [list(a.iter_values()) for a in self.attributes]
        names = [a.name for a in self.attributes]
        for combo in itertools.product(*pools):
            y = Configuration(tuple(zip(names, combo)))
            if self.feasible(x, y):
                yield y

    def radius(self, limit: int = 1_000_000) -> float:
        """Enclosing feature-ball radius; exhaustive max on enumerable domains,
        interval upper bound otherwise."""
        if self._radius is None:
            raw = self.enumerable_size()
            if raw is not None and raw <= limit:
                best = 0.0
                for y in self.enumerate(limit=limit):
                    best = max(best, float(np.linalg.norm(self.featurize(EMPTY_CONTEXT, y))))
                self._radius = best
            else:
                self._radius = math.sqrt(
                    sum(max(abs(lo), abs(hi)) ** 2 for lo, hi in self.feature_intervals())
                )
        return self._radius

    def feature_intervals(self) -> list[tuple[float, float]]:
        """Interval bounds [lo, hi] for every feature row."""
        bounds = self.encoding_bounds()
        out = []
        for f in self.features:
            lo = hi = 0.0
            for v, c in f.terms:
                _, vlo, vhi = bounds[v]
                lo += min(c * vlo, c * vhi)
                hi += max(c * vlo, c * vhi)
            out.append((lo / f.scale, hi / f.scale))
        return out

    def integral_features(self) -> bool:
        """True when every feature row is guaranteed integer-valued."""
        bounds = self.encoding_bounds()
        for f in self.features:
            if f.scale != 1.0:
                return False
            for v, c in f.terms:
                kind = bounds[v][0]
                if kind == "continuous" or c != int(c):
                    return False
        return True

    # -- serialization ---------------------------------------------------

    def to_json_dict(self) -> dict[str, Any]:
        attrs = []
        for a in self.attributes:
            row: dict[str, Any] = {"name": a.name, "kind": a.kind}
            if a.kind == CATEGORICAL:
                row["values"] = list(a.values)
            if a.kind in (INTEGER, CONTINUOUS):
                row["lo"] = a.lo
                row["hi"] = a.hi
            attrs.append(row)
        doc: dict[str, Any] = {
            "attributes": attrs,
            "constraints": [
                {"terms": [[v, c] for v, c in r.terms], "op": r.op, "rhs": r.rhs}
                for r in self.constraints
            ],
            "features": [
                {"name": f.name, "terms": [[v, c] for v, c in f.terms]}
                for f in self.features
            ],
            "scale": {f.name: f.scale for f in self.features if f.scale != 1.0},
        }
        if self.metadata:
            doc["metadata"] = self.metadata
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @staticmethod
    def from_json_dict(doc: Mapping[str, Any]) -> "DomainSpec":
        attrs = []
        for row in doc["attributes"]:
            attrs.append(
                Attribute(
                    row["name"],
                    row["kind"],
                    tuple(row.get("values", ())),
                    row.get("lo"),
                    row.get("hi"),
                )
            )
        cons = [
            LinearConstraint(
                tuple((v, float(c)) for v, c in r["terms"]), r["op"], float(r["rhs"])
            )
            for r in doc.get("constraints", ())
        ]
        scale = doc.get("scale", {})
        feats = [
            FeatureRow(
                f["name"],
                tuple((v, float(c)) for v, c in f["terms"]),
                float(scale.get(f["name"], 1.0)),
            )
            for f in doc.get("features", ())
        ]
        return DomainSpec(attrs, cons, feats, doc.get("metadata"))

    @staticmethod
    def loads(text: str) -> "DomainSpec":
        return DomainSpec.from_json_dict(json.loads(text))
