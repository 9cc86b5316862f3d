"""Experiment harness: run user populations, aggregate regret curves, emit
CSV/SVG artifacts. One session per simulated user; medians are taken across
users at each iteration index, with early-stopped (satisfied) users
contributing zero regret from their stopping point onward.
"""

from __future__ import annotations

import json
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .benchmarks import BUILDERS, sample_context
from .domain import Context, DomainSpec
from .errors import SchemaError
from .metrics import (
    CSV_COLUMNS,
    TheoryEvaluator,
    plot_regret_curves,
    plot_runtime_curves,
    trace_csv_rows,
    write_csv,
)
from .perceptron import ETA_GRID, TraceRow, run_elicitation, write_trace
from .query import QuerySet
from .solver import DEFAULT_TIMEOUT_S, SolverConfig
from .users import SimulatedUser, respond, sample_users

STRATEGIES = ("cp", "random")


@dataclass(frozen=True)
class ExperimentConfig:
    """Serializable description of one population-level experiment."""

    domain: str = "synthetic"
    domain_params: dict[str, Any] = field(default_factory=lambda: {"r": 4})
    k: int = 2
    T: int = 25
    early_stop: bool = False
    users: int = 20
    user_dist: str = "uniform"  # "uniform" | "normal"
    user_params: tuple[float, float] = (1.0, 100.0)
    lam: float = 1.0
    noiseless: bool = False
    strategy: str = "cp"
    backend: str = "exhaustive"
    timeout_s: float = DEFAULT_TIMEOUT_S
    eta: float = 1.0
    adapt_eta: bool = False
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.domain not in BUILDERS:
            raise SchemaError(f"unknown domain {self.domain!r}")
        if self.k < 2:
            raise SchemaError(f"query size k must be >= 2, got {self.k}")
        if self.T < 1:
            raise SchemaError(f"horizon T must be >= 1, got {self.T}")
        if self.users < 1:
            raise SchemaError("population size must be >= 1")
        if self.strategy not in STRATEGIES:
            raise SchemaError(f"unknown strategy {self.strategy!r}")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(backend=self.backend, timeout_s=self.timeout_s)

    def build_domain(self) -> DomainSpec:
        return BUILDERS[self.domain](**self.domain_params)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "domain": self.domain,
            "domain_params": dict(self.domain_params),
            "k": self.k,
            "T": self.T,
            "early_stop": self.early_stop,
            "users": self.users,
            "user_dist": self.user_dist,
            "user_params": list(self.user_params),
            "lam": self.lam,
            "noiseless": self.noiseless,
            "strategy": self.strategy,
            "backend": self.backend,
            "timeout_s": self.timeout_s,
            "eta": self.eta,
            "adapt_eta": self.adapt_eta,
            "seed": self.seed,
            "workers": self.workers,
        }

    @staticmethod
    def from_json_dict(doc: dict[str, Any]) -> "ExperimentConfig":
        doc = dict(doc)
        if "user_params" in doc:
            doc["user_params"] = tuple(doc["user_params"])
        return ExperimentConfig(**doc)

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @staticmethod
    def loads(text: str) -> "ExperimentConfig":
        return ExperimentConfig.from_json_dict(json.loads(text))


class SimulatedChannel:
    """UserChannel over a SimulatedUser; contexts drawn from the user's rng."""

    def __init__(self, spec: DomainSpec, user: SimulatedUser) -> None:
        self.spec = spec
        self.user = user

    def context(self, t: int) -> Context:
        return sample_context(self.spec, self.user.rng)

    def choose(self, x: Context, query: QuerySet, feats: np.ndarray) -> int:
        return respond(self.user, feats)


@dataclass
class UserRun:
    """Outcome of one user's session (rows empty when the session failed)."""

    user_id: int
    rows: list[TraceRow]
    w_star_norm: float
    failure: str | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[UserRun]
    radius: float

    @property
    def failures(self) -> list[UserRun]:
        return [r for r in self.runs if r.failure is not None]

    def regret_matrix(self) -> np.ndarray:
        """users x T instantaneous regret; early-stopped users padded with 0."""
        T = self.config.T
        ok = [r for r in self.runs if r.failure is None]
        mat = np.zeros((len(ok), T))
        for i, run in enumerate(ok):
            for j, row in enumerate(run.rows):
                mat[i, j] = row.regret if row.regret is not None else np.nan
        return mat

    def runtime_matrix(self) -> np.ndarray:
        """users x T cumulative solver wall time in seconds."""
        T = self.config.T
        ok = [r for r in self.runs if r.failure is None]
        mat = np.zeros((len(ok), T))
        for i, run in enumerate(ok):
            total = 0.0
            for j in range(T):
                if j < len(run.rows):
                    total += run.rows[j].diagnostics.get("wall_ms", 0.0) / 1000.0
                mat[i, j] = total
        return mat

    def aggregate_rows(self) -> list[dict]:
        regret = self.regret_matrix()
        runtime = self.runtime_matrix()
        out = []
        for j in range(self.config.T):
            out.append(
                {
                    "t": j + 1,
                    "median_regret": float(np.median(regret[:, j])),
                    "std_regret": float(np.std(regret[:, j])),
                    "median_cum_runtime_s": float(np.median(runtime[:, j])),
                }
            )
        return out


def _run_one(
    cfg: ExperimentConfig, spec: DomainSpec, user_id: int, user: SimulatedUser
) -> UserRun:
    norm = float(np.linalg.norm(user.w_star))
    try:
        channel = SimulatedChannel(spec, user)
        evaluator = TheoryEvaluator(spec, user, cfg.solver_config())
        rows = run_elicitation(
            spec,
            channel,
            cfg.T,
            cfg.k,
            cfg.solver_config(),
            seed=cfg.seed + user_id,
            strategy=cfg.strategy,
            adapt_eta=cfg.adapt_eta,
            eta=cfg.eta,
            early_stop=cfg.early_stop,
            evaluator=evaluator,
        )
        return UserRun(user_id, rows, norm)
    except Exception:
        return UserRun(user_id, [], norm, failure=traceback.format_exc())


def run_experiment(
    cfg: ExperimentConfig, out_dir: str | Path | None = None
) -> ExperimentResult:
    """Run one session per sampled user and aggregate the regret curves.

    When out_dir is given, writes traces/user_NNN.jsonl, sessions.csv (one
    row per user-iteration), aggregate.csv (one row per iteration) and the
    regret/runtime SVG plots. Session failures are recorded on the result
    and do not abort the remaining users.
    """
    spec = cfg.build_domain()
    population = sample_users(
        cfg.user_dist,
        cfg.user_params,
        cfg.users,
        spec.d,
        cfg.seed,
        lam=cfg.lam,
        noiseless=cfg.noiseless,
    )
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            runs = list(
                pool.map(
                    lambda iu: _run_one(cfg, spec, iu[0], iu[1]),
                    enumerate(population.users),
                )
            )
    else:
        runs = [_run_one(cfg, spec, i, u) for i, u in enumerate(population.users)]
    result = ExperimentResult(cfg, runs, radius=spec.radius())
    if out_dir is not None:
        write_artifacts(result, Path(out_dir))
    return result


def write_artifacts(
    result: ExperimentResult, out_dir: Path, label: str | None = None
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    traces = out_dir / "traces"
    traces.mkdir(exist_ok=True)
    session_rows: list[dict] = []
    for run in result.runs:
        if run.failure is not None:
            (traces / f"user_{run.user_id:03d}.failed.txt").write_text(run.failure)
            continue
        write_trace(run.rows, traces / f"user_{run.user_id:03d}.jsonl")
        session_rows.extend(trace_csv_rows(run.user_id, run.rows))
    write_csv(out_dir / "sessions.csv", session_rows, CSV_COLUMNS)
    write_csv(
        out_dir / "aggregate.csv",
        result.aggregate_rows(),
        ["t", "median_regret", "std_regret", "median_cum_runtime_s"],
    )
    name = label or result.config.strategy
    regret = result.regret_matrix()
    runtime = result.runtime_matrix()
    ts = np.arange(1, result.config.T + 1)
    plot_regret_curves(
        out_dir / "regret.svg",
        {name: (ts, np.median(regret, axis=0), np.std(regret, axis=0))},
    )
    plot_runtime_curves(
        out_dir / "runtime.svg", {name: (ts, np.median(runtime, axis=0))}
    )
    (out_dir / "config.json").write_text(result.config.dumps())


def compare_strategies(
    cfg: ExperimentConfig,
    strategies: Sequence[str],
    out_dir: str | Path | None = None,
) -> dict[str, ExperimentResult]:
    """Run the same population under each strategy and aggregate side by side."""
    if len(strategies) < 2:
        raise SchemaError("strategy comparison needs at least 2 strategies")
    results: dict[str, ExperimentResult] = {}
    for strategy in strategies:
        results[strategy] = run_experiment(replace(cfg, strategy=strategy))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        agg_rows = []
        regret_curves = {}
        runtime_curves = {}
        for strategy, result in results.items():
            write_artifacts(result, out / strategy, label=strategy)
            for row in result.aggregate_rows():
                agg_rows.append({"strategy": strategy, **row})
            regret = result.regret_matrix()
            runtime = result.runtime_matrix()
            ts = np.arange(1, cfg.T + 1)
            regret_curves[strategy] = (
                ts,
                np.median(regret, axis=0),
                np.std(regret, axis=0),
            )
            runtime_curves[strategy] = (ts, np.median(runtime, axis=0))
        write_csv(
            out / "aggregate.csv",
            agg_rows,
            ["strategy", "t", "median_regret", "std_regret", "median_cum_runtime_s"],
        )
        plot_regret_curves(out / "regret.svg", regret_curves)
        plot_runtime_curves(out / "runtime.svg", runtime_curves)
    return results
