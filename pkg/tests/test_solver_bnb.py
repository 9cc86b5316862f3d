"""Branch-and-bound checked against exhaustive enumeration on random MILPs."""

import numpy as np
import pytest

from cforge.errors import EnumerationLimitError, NonEnumerableDomainError
from cforge.solver import (
    FEASIBLE_CUTOFF,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    MilpProblem,
    Variable,
    solve_bnb,
    solve_exhaustive,
)
from cforge.solver.problem import ASSIGNMENT_TOL


def _random_milp(rng, n_max=12):
    n = int(rng.integers(2, n_max + 1))
    variables = [Variable(f"x{i}", "binary", 0.0, 1.0) for i in range(n)]
    objective = {f"x{i}": float(rng.normal()) for i in range(n)}
    constraints = []
    from cforge.domain import LinearConstraint

    for _ in range(int(rng.integers(1, 5))):
        terms = tuple(
            (f"x{i}", float(rng.normal()))
            for i in rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        )
        op = ["<=", ">="][int(rng.integers(2))]
        constraints.append(LinearConstraint(terms, op, float(rng.normal())))
    return MilpProblem(variables, objective, constraints)


def test_trivial_binary_max():
    p = MilpProblem([Variable("x", "binary", 0.0, 1.0)], {"x": 1.0}, [])
    out = solve_bnb(p)
    assert out.status == OPTIMAL
    assert out.objective == pytest.approx(1.0)
    assert out.assignment["x"] == pytest.approx(1.0)


def test_infeasible_milp():
    from cforge.domain import LinearConstraint

    p = MilpProblem(
        [Variable("x", "binary", 0.0, 1.0)],
        {"x": 1.0},
        [
            LinearConstraint((("x", 1.0),), ">=", 1.0),
            LinearConstraint((("x", 1.0),), "<=", 0.0),
        ],
    )
    assert solve_bnb(p).status == INFEASIBLE
    assert solve_exhaustive(p).status == INFEASIBLE


def test_unbounded_relaxation():
    p = MilpProblem(
        [Variable("x", "continuous", 0.0, float("inf"))], {"x": 1.0}, []
    )
    assert solve_bnb(p).status == UNBOUNDED


def test_pure_lp_matches_relaxation():
    from cforge.domain import LinearConstraint

    p = MilpProblem(
        [
            Variable("a", "continuous", 0.0, 10.0),
            Variable("b", "continuous", 0.0, 10.0),
        ],
        {"a": 1.0, "b": 2.0},
        [LinearConstraint((("a", 1.0), ("b", 1.0)), "<=", 4.0)],
    )
    out = solve_bnb(p)
    assert out.status == OPTIMAL
    assert out.objective == pytest.approx(8.0)


@pytest.mark.parametrize("seed", range(100))
def test_random_milps_match_exhaustive(seed):
    rng = np.random.default_rng(seed)
    p = _random_milp(rng)
    a = solve_bnb(p)
    b = solve_exhaustive(p)
    assert a.status == b.status
    if a.status == OPTIMAL:
        assert a.objective == pytest.approx(b.objective, abs=1e-6)
        assert p.satisfies(a.assignment, tol=ASSIGNMENT_TOL)


def test_zero_budget_still_returns_something():
    rng = np.random.default_rng(42)
    p = _random_milp(rng, n_max=10)
    out = solve_bnb(p, time_budget=0.0)
    assert out.status in (OPTIMAL, FEASIBLE_CUTOFF, INFEASIBLE)
    if out.assignment is not None:
        assert p.satisfies(out.assignment, tol=ASSIGNMENT_TOL)


def test_integer_variables_with_bounds():
    from cforge.domain import LinearConstraint

    p = MilpProblem(
        [Variable("n", "integer", 0.0, 7.0)],
        {"n": 1.0},
        [LinearConstraint((("n", 1.0),), "<=", 5.4)],
    )
    out = solve_bnb(p)
    assert out.status == OPTIMAL
    assert out.assignment["n"] == pytest.approx(5.0)


def test_exhaustive_rejects_continuous_and_huge():
    p = MilpProblem([Variable("z", "continuous", 0.0, 1.0)], {"z": 1.0}, [])
    with pytest.raises(NonEnumerableDomainError):
        solve_exhaustive(p)
    big = MilpProblem(
        [Variable(f"x{i}", "binary", 0.0, 1.0) for i in range(25)], {}, []
    )
    with pytest.raises(EnumerationLimitError):
        solve_exhaustive(big, limit=1000)


def test_determinism():
    rng = np.random.default_rng(9)
    p = _random_milp(rng)
    a = solve_bnb(p)
    b = solve_bnb(p)
    assert a.status == b.status
    assert a.assignment == b.assignment
