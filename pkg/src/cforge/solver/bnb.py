"""LP-relaxation-guided branch and bound for MilpProblem instances.

Best-first search on the relaxation bound; deterministic tie-breaking
(insertion order), first incumbent wins ties. The time budget is checked
cooperatively at each node expansion; on expiry the best incumbent is
returned with status ``feasible-cutoff``. When no incumbent exists yet the
search keeps going until one is found or infeasibility is proven, so a zero
budget still yields a meaningful outcome.
"""

from __future__ import annotations

import heapq
import time

import numpy as np

from .problem import (
    FEASIBLE_CUTOFF,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    MilpProblem,
    SolveOutcome,
)
from .simplex import LP_INFEASIBLE, LP_OPTIMAL, solve_lp

INT_TOL = 1e-6
PRUNE_TOL = 1e-9


def solve_bnb(problem: MilpProblem, time_budget: float | None = None) -> SolveOutcome:
    start = time.perf_counter()
    if time_budget is None:
        time_budget = problem.time_budget

    idx = problem.index()
    n = len(problem.variables)
    c = np.zeros(n)
    for name, coef in problem.objective.items():
        c[idx[name]] = coef
    A = np.zeros((len(problem.constraints), n))
    ops = []
    b = np.zeros(len(problem.constraints))
    for i, con in enumerate(problem.constraints):
        for name, coef in con.terms:
            A[i, idx[name]] += coef
        ops.append(con.op)
        b[i] = con.rhs
    lo0 = np.array([v.lo for v in problem.variables])
    hi0 = np.array([v.hi for v in problem.variables])
    int_mask = np.array([v.kind != "continuous" for v in problem.variables])

    def relax(lo: np.ndarray, hi: np.ndarray):
        return solve_lp(c, A, ops, b, lo, hi)

    status, x, obj = relax(lo0, hi0)
    if status == LP_INFEASIBLE:
        return SolveOutcome(INFEASIBLE, None, None, time.perf_counter() - start)
    if status != LP_OPTIMAL:
        return SolveOutcome(UNBOUNDED, None, None, time.perf_counter() - start)

    incumbent: np.ndarray | None = None
    incumbent_obj = -np.inf

    # Depth-first phase for an early incumbent: backtracking dive that fixes
    # one fractional variable at a time, nearer bound explored first. Runs
    # until the first integral leaf, which makes the cutoff semantics
    # meaningful on instances where best-first takes long to reach one.
    stack = [(x, lo0, hi0)]
    while stack:
        dx, dlo, dhi = stack.pop()
        dfrac = np.where(int_mask & (np.abs(dx - np.round(dx)) > INT_TOL))[0]
        if dfrac.size == 0:
            xi = dx.copy()
            xi[int_mask] = np.round(xi[int_mask])
            incumbent = xi
            incumbent_obj = float(c @ xi)
            break
        j = int(dfrac[0])
        fl = np.floor(dx[j])
        children = [(dlo, _with(dhi, j, fl)), (_with(dlo, j, fl + 1.0), dhi)]
        if dx[j] - fl > 0.5:
            children.reverse()
        for new_lo, new_hi in reversed(children):  # preferred child on top
            st, xx, _ = relax(new_lo, new_hi)
            if st == LP_OPTIMAL:
                stack.append((xx, new_lo, new_hi))

    # heap entries: (-bound, insertion counter, x, lo, hi)
    counter = 0
    heap: list[tuple[float, int, np.ndarray, np.ndarray, np.ndarray]] = []
    heapq.heappush(heap, (-obj, counter, x, lo0, hi0))
    timed_out = False

    while heap:
        elapsed = time.perf_counter() - start
        if (
            time_budget is not None
            and elapsed >= time_budget
            and incumbent is not None
        ):
            timed_out = True
            break
        neg_bound, _, x, lo, hi = heapq.heappop(heap)
        bound = -neg_bound
        if bound <= incumbent_obj + PRUNE_TOL:
            continue
        frac = np.where(int_mask & (np.abs(x - np.round(x)) > INT_TOL))[0]
        if frac.size == 0:
            xi = x.copy()
            xi[int_mask] = np.round(xi[int_mask])
            val = float(c @ xi)
            if val > incumbent_obj + PRUNE_TOL:
                incumbent = xi
                incumbent_obj = val
            continue
        j = int(frac[0])
        fl = np.floor(x[j])
        for new_lo, new_hi in (
            (lo, _with(hi, j, fl)),
            (_with(lo, j, fl + 1.0), hi),
        ):
            st, xx, oo = relax(new_lo, new_hi)
            if st != LP_OPTIMAL:
                continue
            if oo <= incumbent_obj + PRUNE_TOL:
                continue
            counter += 1
            heapq.heappush(heap, (-oo, counter, xx, new_lo, new_hi))

    wall = time.perf_counter() - start
    if incumbent is None:
        return SolveOutcome(INFEASIBLE, None, None, wall)
    assignment = {v.name: float(incumbent[i]) for i, v in enumerate(problem.variables)}
    status = FEASIBLE_CUTOFF if timed_out else OPTIMAL
    return SolveOutcome(status, assignment, float(incumbent_obj), wall)


def _with(arr: np.ndarray, j: int, val: float) -> np.ndarray:
    out = arr.copy()
    out[j] = val
    return out
