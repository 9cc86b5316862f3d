"""Query-set selection: jointly pick k feature-distinct configurations.

The selection objective trades off diversity against estimated quality:

    maximize  gamma * delta + (1 - gamma) * mu
    delta = sum_{i>=2} ||phi(x, y_1) - phi(x, y_i)||_1
    mu    = sum_{i>=2} <w, phi(x, y_i)>

subject to y_1 maximizing the estimated utility and all members being
pairwise distinct in feature space. gamma follows the 1/t schedule.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .domain import Configuration, Context, DomainSpec, LinearConstraint
from .errors import DomainTooSmallError, SchemaError, SolverFailure
from .solver import (
    FEASIBLE_CUTOFF,
    OPTIMAL,
    MilpProblem,
    SolveOutcome,
    SolverConfig,
    Variable,
    solve,
)

OPT_TOL = 1e-6


def gamma_schedule(t: int) -> float:
    """Exploration weight at iteration t (1-based): 1/t."""
    if t < 1:
        raise ValueError(f"iteration must be >= 1, got {t}")
    return 1.0 / t


def distinctness_epsilon(spec: DomainSpec) -> float:
    """Minimum pairwise L1 feature distance; 1 when all rows are integral."""
    return 1.0 if spec.integral_features() else 1e-4


@dataclass(frozen=True)
class QuerySet:
    """Ordered, feature-distinct feasible configurations shown to the user."""

    configurations: tuple[Configuration, ...]
    context: Context

    @property
    def k(self) -> int:
        return len(self.configurations)


@dataclass(frozen=True)
class QuerySelection:
    """A query set plus the optimization diagnostics that produced it."""

    query: QuerySet
    features: np.ndarray  # k x d
    objective: float
    delta_value: float
    mu_value: float
    gamma: float
    status: str
    wall_time: float


# ---------------------------------------------------------------------------
# argmax utility


def _single_problem(
    spec: DomainSpec, x: Context, w: np.ndarray, prefix: str = ""
) -> MilpProblem:
    bounds = spec.encoding_bounds()
    variables = [
        Variable(prefix + name, kind, lo, hi) for name, (kind, lo, hi) in bounds.items()
    ]
    constraints = [
        _prefixed(c, prefix)
        for c in (
            *spec.structural_constraints(),
            *spec.constraints,
            *spec.context_constraints(x),
        )
    ]
    objective: dict[str, float] = {}
    for j, row in enumerate(spec.features):
        for var, coef in row.terms:
            objective[prefix + var] = (
                objective.get(prefix + var, 0.0) + w[j] * coef / row.scale
            )
    return MilpProblem(variables, objective, constraints)


def _prefixed(c: LinearConstraint, prefix: str) -> LinearConstraint:
    if not prefix:
        return c
    return LinearConstraint(
        tuple((prefix + v, coef) for v, coef in c.terms), c.op, c.rhs
    )


def _decode(spec: DomainSpec, assignment: dict[str, float], prefix: str) -> Configuration:
    values: dict[str, object] = {}
    for a in spec.attributes:
        if a.kind == "boolean":
            values[a.name] = assignment[prefix + a.name] > 0.5
        elif a.kind == "categorical":
            best = max(a.values, key=lambda v: assignment[f"{prefix}{a.name}={v}"])
            values[a.name] = best
        elif a.kind == "integer":
            values[a.name] = int(round(assignment[prefix + a.name]))
        else:
            values[a.name] = float(assignment[prefix + a.name])
    return spec.configuration(values)


def argmax_utility(
    spec: DomainSpec,
    x: Context,
    w: np.ndarray,
    config: SolverConfig | str = "bnb",
) -> tuple[Configuration, float]:
    """A feasible configuration maximizing <w, phi(x, .)>."""
    w = np.asarray(w, dtype=float)
    if w.shape != (spec.d,):
        raise SchemaError(f"weight vector must have length {spec.d}")
    cfg = config if isinstance(config, SolverConfig) else SolverConfig(backend=config)
    if cfg.backend == "exhaustive":
        configs, phis = _distinct_catalog(spec, x)
        utils = phis @ w
        best = None
        best_val = -np.inf
        for y, val in zip(configs, utils):
            if val > best_val + 1e-12:
                best, best_val = y, float(val)
        return best, best_val
    outcome = solve(_single_problem(spec, x, w), cfg)
    if outcome.assignment is None:
        raise SolverFailure(f"argmax solve failed with status {outcome.status}")
    y = _decode(spec, outcome.assignment, "")
    return y, float(w @ spec.featurize(x, y))


# ---------------------------------------------------------------------------
# exhaustive joint selection

# enumeration results per (spec, context); specs are immutable and contexts
# hashable, so reuse across a session's iterations is safe
_CATALOG_CACHE: "weakref.WeakKeyDictionary" = None  # type: ignore[assignment]


def _distinct_catalog(
    spec: DomainSpec, x: Context
) -> tuple[list[Configuration], np.ndarray]:
    """Feasible configurations deduplicated by feature vector, in order."""
    global _CATALOG_CACHE
    if _CATALOG_CACHE is None:
        import weakref

        _CATALOG_CACHE = weakref.WeakKeyDictionary()
    per_spec = _CATALOG_CACHE.setdefault(spec, {})
    if x in per_spec:
        return per_spec[x]
    configs: list[Configuration] = []
    rows: list[np.ndarray] = []
    seen: set[bytes] = set()
    for y in spec.enumerate(x):
        phi = spec.featurize(x, y)
        key = np.round(phi, 9).tobytes()
        if key in seen:
            continue
        seen.add(key)
        configs.append(y)
        rows.append(phi)
    if not configs:
        raise SolverFailure("no feasible configuration under this context")
    per_spec[x] = (configs, np.array(rows))
    return per_spec[x]


def _select_exhaustive(
    spec: DomainSpec,
    x: Context,
    w: np.ndarray,
    k: int,
    gamma: float,
    eps: float,
) -> tuple[list[int], list[Configuration], np.ndarray]:
    """Joint selection by enumeration.

    The objective is separable over y_2..y_k given y_1, so for each tied
    optimal y_1 the best companions are the top-scoring distinct feature
    vectors (greedy skip keeps the pairwise-distinctness constraint, which
    is vacuous for integral feature maps)."""
    configs, phis = _distinct_catalog(spec, x)
    utils = phis @ w
    best_util = utils.max()
    tie = np.nonzero(utils >= best_util - 1e-9)[0]
    if len(configs) < k:
        raise DomainTooSmallError(
            f"only {len(configs)} feature-distinct configurations, need {k}"
        )
    best_sel: list[int] | None = None
    best_obj = -np.inf
    indices = np.arange(len(configs))
    for i1 in tie:
        dists = np.abs(phis - phis[i1]).sum(axis=1)
        scores = gamma * dists + (1.0 - gamma) * utils
        order = indices[np.lexsort((indices, -scores))]
        chosen: list[int] = [int(i1)]
        total = 0.0
        for j in order:
            if len(chosen) == k:
                break
            if j == i1:
                continue
            if all(np.abs(phis[j] - phis[c]).sum() >= eps - 1e-9 for c in chosen):
                chosen.append(int(j))
                total += scores[j]
        if len(chosen) < k:
            continue
        if total > best_obj + 1e-12:
            best_obj = total
            best_sel = chosen
    if best_sel is None:
        raise DomainTooSmallError(
            f"fewer than {k} feature-distinct configurations under epsilon={eps}"
        )
    return best_sel, configs, phis


# ---------------------------------------------------------------------------
# MILP joint selection


class _JointBuilder:
    """Builds the k-copy MILP with exact L1 linearizations."""

    def __init__(self, spec: DomainSpec, x: Context, w: np.ndarray, k: int, gamma: float):
        self.spec = spec
        self.x = x
        self.w = w
        self.k = k
        self.gamma = gamma
        self.variables: list[Variable] = []
        self.constraints: list[LinearConstraint] = []
        self.objective: dict[str, float] = {}
        self.intervals = spec.feature_intervals()
        self._aux = 0

    def prefix(self, i: int) -> str:
        return f"q{i}."

    def build(self, opt_value: float, eps: float) -> MilpProblem:
        spec = self.spec
        for i in range(1, self.k + 1):
            p = self.prefix(i)
            base = _single_problem(spec, self.x, self.w, p)
            self.variables.extend(base.variables)
            self.constraints.extend(base.constraints)
            if i >= 2:
                for var, coef in base.objective.items():
                    self.objective[var] = (
                        self.objective.get(var, 0.0) + (1.0 - self.gamma) * coef
                    )
        # y1 optimality (within solver tolerance)
        opt_terms = []
        p1 = self.prefix(1)
        acc: dict[str, float] = {}
        for j, row in enumerate(spec.features):
            for var, coef in row.terms:
                acc[p1 + var] = acc.get(p1 + var, 0.0) + self.w[j] * coef / row.scale
        opt_terms = tuple(acc.items())
        self.constraints.append(LinearConstraint(opt_terms, ">=", opt_value - OPT_TOL))

        # pairwise L1 terms: objective for pairs (1, i), distinctness for all
        for a in range(1, self.k + 1):
            for b in range(a + 1, self.k + 1):
                exprs = [
                    self._abs_expr(j, self.prefix(a), self.prefix(b))
                    for j in range(spec.d)
                ]
                if a == 1:
                    for terms in exprs:
                        for var, coef in terms:
                            self.objective[var] = (
                                self.objective.get(var, 0.0) + self.gamma * coef
                            )
                flat: dict[str, float] = {}
                for terms in exprs:
                    for var, coef in terms:
                        flat[var] = flat.get(var, 0.0) + coef
                self.constraints.append(
                    LinearConstraint(tuple(flat.items()), ">=", eps)
                )
        return MilpProblem(self.variables, self.objective, self.constraints)

    def _row_diff(
        self, j: int, pa: str, pb: str
    ) -> list[tuple[str, float]]:
        row = self.spec.features[j]
        diff: dict[str, float] = {}
        for var, coef in row.terms:
            diff[pa + var] = diff.get(pa + var, 0.0) + coef / row.scale
            diff[pb + var] = diff.get(pb + var, 0.0) - coef / row.scale
        return list(diff.items())

    def _abs_expr(self, j: int, pa: str, pb: str) -> tuple[tuple[str, float], ...]:
        """Linear expression equal to |phi_j(a) - phi_j(b)| at integral points."""
        row = self.spec.features[j]
        bounds = self.spec.encoding_bounds()
        indicator = (
            len(row.terms) == 1
            and row.terms[0][1] == 1.0
            and row.scale == 1.0
            and bounds[row.terms[0][0]][0] == "binary"
        )
        if indicator:
            var = row.terms[0][0]
            a, b = pa + var, pb + var
            z = self._new_var("and", "continuous", 0.0, 1.0)
            self.constraints.append(LinearConstraint(((z, 1.0), (a, -1.0)), "<=", 0.0))
            self.constraints.append(LinearConstraint(((z, 1.0), (b, -1.0)), "<=", 0.0))
            self.constraints.append(
                LinearConstraint(((a, 1.0), (b, 1.0), (z, -1.0)), "<=", 1.0)
            )
            # |a - b| = a + b - 2ab
            return ((a, 1.0), (b, 1.0), (z, -2.0))
        lo, hi = self.intervals[j]
        width = hi - lo
        big_m = 2.0 * width + 1.0
        diff = self._row_diff(j, pa, pb)
        t = self._new_var("abs", "continuous", 0.0, max(width, 0.0))
        s = self._new_var("sgn", "binary", 0.0, 1.0)
        self.constraints.append(
            LinearConstraint(((t, 1.0), *[(v, -c) for v, c in diff]), ">=", 0.0)
        )
        self.constraints.append(
            LinearConstraint(((t, 1.0), *diff), ">=", 0.0)
        )
        self.constraints.append(
            LinearConstraint(
                ((t, 1.0), *[(v, -c) for v, c in diff], (s, big_m)), "<=", big_m
            )
        )
        self.constraints.append(
            LinearConstraint(((t, 1.0), *diff, (s, -big_m)), "<=", 0.0)
        )
        return ((t, 1.0),)

    def _new_var(self, tag: str, kind: str, lo: float, hi: float) -> str:
        name = f"_{tag}{self._aux}"
        self._aux += 1
        self.variables.append(Variable(name, kind, lo, hi))
        return name


# ---------------------------------------------------------------------------
# public entry points


def select_query(
    spec: DomainSpec,
    x: Context,
    w: np.ndarray,
    k: int,
    gamma: float,
    config: SolverConfig | str = "bnb",
) -> QuerySelection:
    """Select k feature-distinct configurations optimizing gamma*delta+(1-gamma)*mu."""
    if k < 2:
        raise ValueError(f"query size k must be >= 2, got {k}")
    if not (0.0 <= gamma <= 1.0):
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    w = np.asarray(w, dtype=float)
    if w.shape != (spec.d,):
        raise SchemaError(f"weight vector must have length {spec.d}")
    cfg = config if isinstance(config, SolverConfig) else SolverConfig(backend=config)
    eps = distinctness_epsilon(spec)
    start = time.perf_counter()

    if cfg.backend == "exhaustive":
        sel, configs, phis = _select_exhaustive(spec, x, w, k, gamma, eps)
        chosen = [configs[i] for i in sel]
        feats = phis[sel]
        status = OPTIMAL
    else:
        _, opt_value = argmax_utility(spec, x, w, cfg)
        builder = _JointBuilder(spec, x, w, k, gamma)
        problem = builder.build(opt_value, eps)
        problem.time_budget = cfg.timeout_s
        outcome = solve(problem, cfg)
        if outcome.assignment is None:
            if outcome.status == "infeasible":
                raise DomainTooSmallError(
                    f"no feasible set of {k} feature-distinct configurations"
                )
            raise SolverFailure(f"joint solve failed with status {outcome.status}")
        chosen = [
            _decode(spec, outcome.assignment, builder.prefix(i))
            for i in range(1, k + 1)
        ]
        feats = np.array([spec.featurize(x, y) for y in chosen])
        status = outcome.status
        if status == FEASIBLE_CUTOFF:
            chosen, feats = _repair_leader(spec, x, w, cfg, chosen, feats, eps)

    utils = feats @ w
    delta = float(np.abs(feats[1:] - feats[0]).sum())
    mu = float(utils[1:].sum())
    objective = gamma * delta + (1.0 - gamma) * mu
    wall = time.perf_counter() - start
    return QuerySelection(
        query=QuerySet(tuple(chosen), x),
        features=feats,
        objective=objective,
        delta_value=delta,
        mu_value=mu,
        gamma=gamma,
        status=status,
        wall_time=wall,
    )


def _repair_leader(spec, x, w, cfg, chosen, feats, eps):
    """Under a cutoff the incumbent's y1 may be sub-optimal; re-solve the cheap
    argmax and overwrite y1 when that improves it and keeps distinctness."""
    y_best, best_val = argmax_utility(spec, x, w, cfg)
    phi_best = spec.featurize(x, y_best)
    if float(w @ feats[0]) >= best_val - OPT_TOL:
        return chosen, feats
    if all(
        np.abs(phi_best - feats[i]).sum() >= eps - 1e-9 for i in range(1, len(chosen))
    ):
        chosen = [y_best, *chosen[1:]]
        feats = np.vstack([phi_best, feats[1:]])
    return chosen, feats


def random_query(
    spec: DomainSpec,
    x: Context,
    k: int,
    rng: np.random.Generator,
) -> QuerySelection:
    """Uniform-random baseline: k distinct feature vectors, no optimization."""
    if k < 2:
        raise ValueError(f"query size k must be >= 2, got {k}")
    configs, phis = _distinct_catalog(spec, x)
    if len(configs) < k:
        raise DomainTooSmallError(
            f"only {len(configs)} feature-distinct configurations, need {k}"
        )
    idx = rng.choice(len(configs), size=k, replace=False)
    chosen = [configs[i] for i in idx]
    feats = phis[idx]
    return QuerySelection(
        query=QuerySet(tuple(chosen), x),
        features=feats,
        objective=0.0,
        delta_value=float(np.abs(feats[1:] - feats[0]).sum()),
        mu_value=0.0,
        gamma=0.0,
        status="random",
        wall_time=0.0,
    )
