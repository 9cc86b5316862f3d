"""MILP solving: built-in exact backends plus an external LP-file adapter."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import SolverConfigError
from .bnb import solve_bnb
from .exhaustive import solve_exhaustive
from .lpfile import parse_lp, write_lp
from .problem import (
    FEASIBLE_CUTOFF,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    MilpProblem,
    SolveOutcome,
    Variable,
)

DEFAULT_TIMEOUT_S = 20.0  # query-selection cutoff


@dataclass(frozen=True)
class SolverConfig:
    """Backend selection shared by the query strategy, harness and service."""

    backend: str = "bnb"  # "exhaustive" | "bnb" | "external"
    timeout_s: float | None = DEFAULT_TIMEOUT_S
    command: tuple[str, ...] = ()  # external solver argv prefix

    def __post_init__(self) -> None:
        if self.backend not in ("exhaustive", "bnb", "external"):
            raise SolverConfigError(f"unknown backend {self.backend!r}")


def solve(problem: MilpProblem, config: SolverConfig | str = "bnb") -> SolveOutcome:
    """Solve a MILP with the configured backend."""
    if isinstance(config, str):
        config = SolverConfig(backend=config)
    budget = problem.time_budget if problem.time_budget is not None else config.timeout_s
    if config.backend == "bnb":
        return solve_bnb(problem, budget)
    if config.backend == "exhaustive":
        return solve_exhaustive(problem)
    from .external import solve_external

    return solve_external(problem, list(config.command), budget)


__all__ = [
    "DEFAULT_TIMEOUT_S",
    "FEASIBLE_CUTOFF",
    "INFEASIBLE",
    "OPTIMAL",
    "UNBOUNDED",
    "MilpProblem",
    "SolveOutcome",
    "SolverConfig",
    "Variable",
    "parse_lp",
    "solve",
    "solve_bnb",
    "solve_exhaustive",
    "write_lp",
]
