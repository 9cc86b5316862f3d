"""Exhaustive enumeration backend for all-discrete problems (test oracle)."""

from __future__ import annotations

import itertools
import time

import numpy as np

from ..errors import EnumerationLimitError, NonEnumerableDomainError
from .problem import INFEASIBLE, OPTIMAL, MilpProblem, SolveOutcome

DEFAULT_LIMIT = 1_000_000


def solve_exhaustive(problem: MilpProblem, limit: int = DEFAULT_LIMIT) -> SolveOutcome:
    """Enumerate every integer assignment; first maximizer in enumeration
    order wins ties. Always returns status=optimal or infeasible."""
    start = time.perf_counter()
    for v in problem.variables:
        if v.kind == "continuous":
            raise NonEnumerableDomainError(
                f"continuous variable {v.name!r} is not enumerable"
            )
    total = 1
    for v in problem.variables:
        total *= int(v.hi) - int(v.lo) + 1
        if total > limit:
            raise EnumerationLimitError(f"joint tuples exceed limit {limit}")

    names = [v.name for v in problem.variables]
    pools = [range(int(v.lo), int(v.hi) + 1) for v in problem.variables]
    best: dict[str, float] | None = None
    best_obj = -np.inf
    for combo in itertools.product(*pools):
        assignment = {n: float(val) for n, val in zip(names, combo)}
        if not all(c.holds(assignment, 1e-9) for c in problem.constraints):
            continue
        obj = problem.objective_value(assignment)
        if obj > best_obj + 1e-12:
            best = assignment
            best_obj = obj
    wall = time.perf_counter() - start
    if best is None:
        return SolveOutcome(INFEASIBLE, None, None, wall)
    return SolveOutcome(OPTIMAL, best, float(best_obj), wall)
