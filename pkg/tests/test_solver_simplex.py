"""LP core checked against an independent solver oracle (scipy)."""

import numpy as np
import pytest

from cforge.solver.simplex import (
    LP_INFEASIBLE,
    LP_OPTIMAL,
    LP_UNBOUNDED,
    solve_lp,
)

scipy_opt = pytest.importorskip("scipy.optimize")


def _oracle(c, A, ops, b, lo, hi):
    """Maximize via scipy.linprog (minimizes, so negate)."""
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, op, rhs in zip(A, ops, b):
        if op == "<=":
            A_ub.append(row)
            b_ub.append(rhs)
        elif op == ">=":
            A_ub.append(-np.asarray(row))
            b_ub.append(-rhs)
        else:
            A_eq.append(row)
            b_eq.append(rhs)
    res = scipy_opt.linprog(
        -np.asarray(c),
        A_ub=np.array(A_ub) if A_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(A_eq) if A_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=list(zip(lo, hi)),
        method="highs",
    )
    return res


def test_basic_maximization():
    status, x, obj = solve_lp(
        np.array([1.0, 2.0]),
        np.array([[1.0, 1.0]]),
        ["<="],
        np.array([3.0]),
        np.zeros(2),
        np.full(2, 10.0),
    )
    assert status == LP_OPTIMAL
    assert obj == pytest.approx(6.0)
    assert x[1] == pytest.approx(3.0)


def test_infeasible():
    status, _, _ = solve_lp(
        np.array([1.0]),
        np.array([[1.0], [1.0]]),
        [">=", "<="],
        np.array([2.0, 1.0]),
        np.zeros(1),
        np.full(1, 10.0),
    )
    assert status == LP_INFEASIBLE


def test_unbounded():
    status, _, _ = solve_lp(
        np.array([1.0]),
        np.zeros((0, 1)),
        [],
        np.zeros(0),
        np.zeros(1),
        np.full(1, np.inf),
    )
    assert status == LP_UNBOUNDED


def test_negative_lower_bounds():
    status, x, obj = solve_lp(
        np.array([-1.0]),
        np.zeros((0, 1)),
        [],
        np.zeros(0),
        np.array([-5.0]),
        np.array([5.0]),
    )
    assert status == LP_OPTIMAL
    assert obj == pytest.approx(5.0)
    assert x[0] == pytest.approx(-5.0)


@pytest.mark.parametrize("seed", range(40))
def test_random_lps_match_scipy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 6))
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m) + 1.0
    ops = [["<=", ">=", "="][int(rng.integers(3))] for _ in range(m)]
    lo = np.where(rng.random(n) < 0.3, -rng.random(n) * 3, 0.0)
    hi = lo + rng.random(n) * 5 + 0.5
    status, x, obj = solve_lp(c, A, ops, b, lo, hi)
    res = _oracle(c, A, ops, b, lo, hi)
    if res.status == 2:
        assert status == LP_INFEASIBLE
    else:
        assert res.status == 0
        assert status == LP_OPTIMAL
        assert obj == pytest.approx(-res.fun, abs=1e-7)
        # returned point is feasible
        for row, op, rhs in zip(A, ops, b):
            lhs = float(row @ x)
            if op == "<=":
                assert lhs <= rhs + 1e-7
            elif op == ">=":
                assert lhs >= rhs - 1e-7
            else:
                assert lhs == pytest.approx(rhs, abs=1e-7)
        assert np.all(x >= lo - 1e-9) and np.all(x <= hi + 1e-9)
