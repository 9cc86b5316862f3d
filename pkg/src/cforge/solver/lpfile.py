"""Text LP-file export/import (CPLEX-style layout) for external backends."""

from __future__ import annotations

import re

from ..domain import LinearConstraint
from ..errors import SchemaError
from .problem import MilpProblem, Variable

_OPS = {"<=": "<=", "=": "=", ">=": ">=", "<": "<=", ">": ">="}


def _sanitize(name: str) -> str:
    # '=' appears in one-hot variable names but is not legal in LP files
    return name.replace("=", "#")


def _unsanitize(name: str) -> str:
    return name.replace("#", "=")


def _expr(terms: list[tuple[str, float]]) -> str:
    parts: list[str] = []
    for raw, coef in terms:
        name = _sanitize(raw)
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = name if mag == 1.0 else f"{mag:.12g} {name}"
        if not parts and sign == "+":
            parts.append(body)
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts) if parts else "0"


def write_lp(problem: MilpProblem) -> str:
    lines = ["Maximize"]
    obj = [(n, c) for n, c in problem.objective.items() if c != 0.0]
    lines.append(f" obj: {_expr(obj)}")
    lines.append("Subject To")
    for i, con in enumerate(problem.constraints):
        lines.append(f" c{i}: {_expr(list(con.terms))} {con.op} {con.rhs:.12g}")
    lines.append("Bounds")
    for v in problem.variables:
        lines.append(f" {v.lo:.12g} <= {_sanitize(v.name)} <= {v.hi:.12g}")
    generals = [_sanitize(v.name) for v in problem.variables if v.kind == "integer"]
    if generals:
        lines.append("Generals")
        lines.extend(f" {n}" for n in generals)
    binaries = [_sanitize(v.name) for v in problem.variables if v.kind == "binary"]
    if binaries:
        lines.append("Binaries")
        lines.extend(f" {n}" for n in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


_TERM_RE = re.compile(r"([+-])?\s*(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][\w.#\[\]-]*)")


def _parse_expr(text: str) -> list[tuple[str, float]]:
    terms = []
    for sign, num, name in _TERM_RE.findall(text):
        coef = float(num) if num else 1.0
        if sign == "-":
            coef = -coef
        terms.append((_unsanitize(name), coef))
    return terms


def parse_lp(text: str) -> MilpProblem:
    """Parse the subset of the LP format emitted by :func:`write_lp`."""
    section = None
    objective: dict[str, float] = {}
    constraints: list[LinearConstraint] = []
    bounds: dict[str, tuple[float, float]] = {}
    kinds: dict[str, str] = {}
    order: list[str] = []

    def seen(name: str) -> None:
        if name not in kinds:
            kinds[name] = "continuous"
            order.append(name)

    for raw in text.splitlines():
        line = raw.split("\\")[0].strip()
        if not line:
            continue
        lower = line.lower()
        if lower in ("maximize", "minimize", "subject to", "st", "s.t.",
                     "bounds", "generals", "general", "binaries", "binary", "end"):
            section = lower
            continue
        if section == "maximize":
            body = line.split(":", 1)[-1]
            for name, coef in _parse_expr(body):
                objective[name] = objective.get(name, 0.0) + coef
                seen(name)
        elif section in ("subject to", "st", "s.t."):
            body = line.split(":", 1)[-1]
            m = re.search(r"(<=|>=|=|<|>)", body)
            if not m:
                raise SchemaError(f"cannot parse constraint line {line!r}")
            lhs, rhs = body[: m.start()], body[m.end() :]
            terms = _parse_expr(lhs)
            for name, _ in terms:
                seen(name)
            constraints.append(
                LinearConstraint(tuple(terms), _OPS[m.group(1)], float(rhs))
            )
        elif section == "bounds":
            m = re.match(
                r"([-\d.eE+]+)\s*<=\s*([\w.#\[\]-]+)\s*<=\s*([-\d.eE+]+)", line
            )
            if not m:
                raise SchemaError(f"cannot parse bounds line {line!r}")
            lo, name, hi = m.groups()
            name = _unsanitize(name)
            bounds[name] = (float(lo), float(hi))
            seen(name)
        elif section in ("generals", "general"):
            name = _unsanitize(line)
            seen(name)
            kinds[name] = "integer"
        elif section in ("binaries", "binary"):
            name = _unsanitize(line)
            seen(name)
            kinds[name] = "binary"

    # the writer declares every variable in Bounds, in declaration order;
    # prefer that order so write -> parse -> write is the identity
    if set(bounds) >= set(order):
        order = [n for n in bounds] + [n for n in order if n not in bounds]
    variables = []
    for name in order:
        kind = kinds[name]
        lo, hi = bounds.get(name, (0.0, 1.0) if kind == "binary" else (0.0, float("inf")))
        variables.append(Variable(name, kind, lo, hi))
    return MilpProblem(variables, objective, constraints)
