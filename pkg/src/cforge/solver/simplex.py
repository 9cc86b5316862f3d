"""Dense two-phase primal simplex with Bland's rule.

Solves  max c.x  s.t.  A x (<=,=,>=) b,  lo <= x <= hi.
Small instances only; anti-cycling via Bland's pivoting rule.
"""

from __future__ import annotations

import numpy as np

PIVOT_TOL = 1e-9

LP_OPTIMAL = "optimal"
LP_INFEASIBLE = "infeasible"
LP_UNBOUNDED = "unbounded"


def _run_simplex(T: np.ndarray, basis: list[int], cost: np.ndarray) -> str:
    """Minimize cost.x on the tableau in place. Returns optimal/unbounded."""
    m, ncols = T.shape
    n = ncols - 1
    while True:
        reduced = cost[:n] - cost[basis] @ T[:, :n]
        candidates = np.nonzero(reduced < -PIVOT_TOL)[0]
        if candidates.size == 0:
            return LP_OPTIMAL
        enter = int(candidates[0])  # Bland: lowest index
        col = T[:, enter]
        rows = np.nonzero(col > PIVOT_TOL)[0]
        if rows.size == 0:
            return LP_UNBOUNDED
        ratios = T[rows, n] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12]
        leave = int(min(tied, key=lambda i: basis[i]))  # Bland: lowest basis var
        piv = T[leave, enter]
        T[leave] /= piv
        factors = T[:, enter].copy()
        factors[leave] = 0.0
        T -= np.outer(factors, T[leave])
        basis[leave] = enter


def solve_lp(
    c: np.ndarray,
    A: np.ndarray,
    ops: list[str],
    b: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
) -> tuple[str, np.ndarray | None, float | None]:
    """Maximize c.x subject to row constraints and variable bounds.

    Free lower bounds are handled by variable splitting; finite upper bounds
    become explicit rows.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(len(ops), c.size)
    b = np.asarray(b, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = c.size

    # x = lo + x' for finite lo; x = xp - xn for free lo.
    split = ~np.isfinite(lo)
    shift = np.where(split, 0.0, lo)
    ncols = n + int(split.sum())
    expand = np.zeros((n, ncols))
    j = n
    for i in range(n):
        expand[i, i] = 1.0
        if split[i]:
            expand[i, j] = -1.0
            j += 1

    rows_A: list[np.ndarray] = []
    rows_op: list[str] = []
    rows_b: list[float] = []
    for i in range(len(ops)):
        rows_A.append(A[i] @ expand)
        rows_op.append(ops[i])
        rows_b.append(float(b[i] - A[i] @ shift))
    for i in range(n):
        if np.isfinite(hi[i]):
            row = np.zeros(ncols)
            row[i] = 1.0
            if split[i]:
                row[n + int(split[:i].sum())] = -1.0
            rows_A.append(row)
            rows_op.append("<=")
            rows_b.append(float(hi[i] - shift[i]))

    m = len(rows_A)
    Ae = np.array(rows_A) if m else np.zeros((0, ncols))
    be = np.array(rows_b)

    # Equational form: slack per <=, surplus per >=, then flip negative rhs.
    nslack = sum(1 for op in rows_op if op != "=")
    width = ncols + nslack
    M = np.zeros((m, width + m))  # artificial columns reserved at the end
    rhs = np.zeros(m)
    basis: list[int] = []
    art_cols: list[int] = []
    sj = ncols
    for i in range(m):
        row = np.zeros(width)
        row[:ncols] = Ae[i]
        r = be[i]
        if rows_op[i] == "<=":
            row[sj] = 1.0
            slack = sj
            sj += 1
        elif rows_op[i] == ">=":
            row[sj] = -1.0
            slack = sj
            sj += 1
        else:
            slack = -1
        if r < 0:
            row = -row
            r = -r
        M[i, :width] = row
        rhs[i] = r
        if slack >= 0 and M[i, slack] > 0.5:
            basis.append(slack)
        else:
            aj = width + i
            M[i, aj] = 1.0
            basis.append(aj)
            art_cols.append(aj)

    T = np.hstack([M, rhs[:, None]])

    if art_cols:
        cost1 = np.zeros(width + m + 1)
        cost1[art_cols] = 1.0
        status = _run_simplex(T, basis, cost1)
        assert status == LP_OPTIMAL  # phase 1 is always bounded
        if float(cost1[basis] @ T[:, -1]) > 1e-7:
            return LP_INFEASIBLE, None, None
        # Pivot remaining artificials out; drop redundant rows.
        keep = np.ones(T.shape[0], dtype=bool)
        for i in range(T.shape[0]):
            if basis[i] >= width:
                nz = np.nonzero(np.abs(T[i, :width]) > PIVOT_TOL)[0]
                if nz.size == 0:
                    keep[i] = False
                else:
                    enter = int(nz[0])
                    piv = T[i, enter]
                    T[i] /= piv
                    factors = T[:, enter].copy()
                    factors[i] = 0.0
                    T -= np.outer(factors, T[i])
                    basis[i] = enter
        T = T[keep]
        basis = [bv for bv, k in zip(basis, keep) if k]
        T[:, width:-1] = 0.0  # artificials may never re-enter

    cost2 = np.zeros(width + m + 1)
    cost2[:ncols] = -(c @ expand)  # maximize -> minimize negation
    status = _run_simplex(T, basis, cost2)
    if status == LP_UNBOUNDED:
        return LP_UNBOUNDED, None, None

    xe = np.zeros(width + m)
    for i, bv in enumerate(basis):
        xe[bv] = T[i, -1]
    x = expand @ xe[:ncols] + shift
    return LP_OPTIMAL, x, float(c @ x)
