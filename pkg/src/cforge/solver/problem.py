"""Mixed-integer linear program data model."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..domain import LinearConstraint
from ..errors import SchemaError

OPTIMAL = "optimal"
FEASIBLE_CUTOFF = "feasible-cutoff"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

ASSIGNMENT_TOL = 1e-6


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "binary" | "integer" | "continuous"
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.kind not in ("binary", "integer", "continuous"):
            raise SchemaError(f"bad variable kind {self.kind!r}")
        if self.kind in ("binary", "integer") and not (
            np.isfinite(self.lo) and np.isfinite(self.hi)
        ):
            raise SchemaError(f"integer variable {self.name!r} needs finite bounds")
        if self.lo > self.hi:
            raise SchemaError(f"variable {self.name!r} has lo > hi")


@dataclass
class MilpProblem:
    """Maximize a linear objective subject to linear constraints."""

    variables: list[Variable]
    objective: dict[str, float]
    constraints: list[LinearConstraint] = field(default_factory=list)
    time_budget: float | None = None

    def __post_init__(self) -> None:
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate variable names")
        known = set(names)
        for n in self.objective:
            if n not in known:
                raise SchemaError(f"objective references unknown variable {n!r}")
        for c in self.constraints:
            for n, _ in c.terms:
                if n not in known:
                    raise SchemaError(f"constraint references unknown variable {n!r}")

    def index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    def objective_value(self, assignment: Mapping[str, float]) -> float:
        return sum(c * assignment[n] for n, c in self.objective.items())

    def satisfies(
        self, assignment: Mapping[str, float], tol: float = ASSIGNMENT_TOL
    ) -> bool:
        for v in self.variables:
            val = assignment[v.name]
            if val < v.lo - tol or val > v.hi + tol:
                return False
            if v.kind != "continuous" and abs(val - round(val)) > tol:
                return False
        return all(c.holds(assignment, tol) for c in self.constraints)


@dataclass(frozen=True)
class SolveOutcome:
    status: str
    assignment: dict[str, float] | None
    objective: float | None
    wall_time: float

    def __post_init__(self) -> None:
        has = self.assignment is not None
        if has != (self.status in (OPTIMAL, FEASIBLE_CUTOFF)):
            raise SchemaError(
                f"status {self.status!r} inconsistent with assignment presence"
            )
