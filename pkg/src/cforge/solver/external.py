"""Adapter for external MILP solvers speaking the LP-file interface.

The external command is invoked as ``cmd <input.lp> <output.sol>``. The
solution file is plain text: first line ``status <optimal|feasible-cutoff|
infeasible|unbounded>``, then ``objective <value>`` and one ``<name> <value>``
line per variable (sanitized names, as written in the LP file).
"""

from __future__ import annotations

import subprocess
import tempfile
import time
from pathlib import Path

from ..errors import SolverConfigError
from .lpfile import _unsanitize, write_lp
from .problem import INFEASIBLE, OPTIMAL, UNBOUNDED, FEASIBLE_CUTOFF, MilpProblem, SolveOutcome

_STATUSES = {OPTIMAL, FEASIBLE_CUTOFF, INFEASIBLE, UNBOUNDED}


def solve_external(
    problem: MilpProblem, command: list[str], time_budget: float | None = None
) -> SolveOutcome:
    if not command:
        raise SolverConfigError("external backend requires solver.command")
    start = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="cforge-lp-") as tmp:
        lp_path = Path(tmp) / "problem.lp"
        sol_path = Path(tmp) / "solution.sol"
        lp_path.write_text(write_lp(problem), encoding="utf-8")
        try:
            subprocess.run(
                [*command, str(lp_path), str(sol_path)],
                check=True,
                capture_output=True,
                timeout=None if time_budget is None else time_budget + 30,
            )
        except (OSError, subprocess.SubprocessError) as exc:
            raise SolverConfigError(f"external solver failed: {exc}") from exc
        if not sol_path.exists():
            raise SolverConfigError("external solver produced no solution file")
        text = sol_path.read_text(encoding="utf-8")

    status = None
    objective = None
    assignment: dict[str, float] = {}
    for line in text.splitlines():
        parts = line.split()
        if len(parts) != 2:
            continue
        key, value = parts
        if key == "status":
            status = value
        elif key == "objective":
            objective = float(value)
        else:
            assignment[_unsanitize(key)] = float(value)
    if status not in _STATUSES:
        raise SolverConfigError(f"external solver reported bad status {status!r}")
    wall = time.perf_counter() - start
    if status in (INFEASIBLE, UNBOUNDED):
        return SolveOutcome(status, None, None, wall)
    return SolveOutcome(status, assignment, objective, wall)


def write_solution(outcome: SolveOutcome) -> str:
    """Inverse of the parsing above; used by the bundled reference command."""
    lines = [f"status {outcome.status}"]
    if outcome.assignment is not None:
        lines.append(f"objective {outcome.objective!r}")
        from .lpfile import _sanitize

        for name, value in outcome.assignment.items():
            lines.append(f"{_sanitize(name)} {value!r}")
    return "\n".join(lines) + "\n"
