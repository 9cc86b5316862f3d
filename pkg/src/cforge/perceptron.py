"""The Choice Perceptron loop: weight updates, step-size adaptation, traces.

w starts at zero and moves by eta * Delta after every observed choice, where
Delta is the chosen feature vector minus the mean of the rejected ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol

import numpy as np

from .domain import Context, DomainSpec
from .query import QuerySelection, QuerySet, gamma_schedule, random_query, select_query
from .solver import SolverConfig
from .users import deltas_for_choices

ETA_GRID = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)
DEFAULT_ETA = 1.0


@dataclass(frozen=True)
class UpdateDelta:
    delta: np.ndarray
    chosen: np.ndarray
    others_mean: np.ndarray


def compute_delta(feats: np.ndarray, chosen: int) -> UpdateDelta:
    """Perceptron update direction for a 1-based choice over k >= 2 options."""
    feats = np.asarray(feats, dtype=float)
    k = feats.shape[0]
    if k < 2:
        raise ValueError("query set must contain at least 2 options")
    if not (1 <= chosen <= k):
        raise IndexError(f"chosen index {chosen} out of range [1, {k}]")
    picked = feats[chosen - 1]
    others = np.delete(feats, chosen - 1, axis=0)
    mean = others.mean(axis=0)
    # averaging the differences (not differencing the averages) keeps Delta
    # exactly zero when all options share one feature vector
    delta = (picked - others).sum(axis=0) / (k - 1)
    return UpdateDelta(delta, picked, mean)


@dataclass(frozen=True)
class HistoryRecord:
    feats: np.ndarray  # k x d
    chosen: int  # 1-based
    eta: float
    context_label: str | None = None


@dataclass
class SessionState:
    """Weights, step size and full feedback history of one elicitation run."""

    d: int
    t: int = 1
    eta: float = DEFAULT_ETA
    w: np.ndarray = None  # type: ignore[assignment]
    history: list[HistoryRecord] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.w is None:
            self.w = np.zeros(self.d)


def apply_update(state: SessionState, update: UpdateDelta) -> None:
    """w <- w + eta * Delta; increments t. History is appended by the caller."""
    state.w = state.w + state.eta * update.delta
    state.t += 1


def adapt_step_size(
    history: list[HistoryRecord], grid: Iterable[float] = ETA_GRID
) -> float:
    """Grid value maximizing leave-one-out choice-prediction accuracy.

    The replayed model for fold s is the Perceptron run over all other
    recorded rounds with the candidate step size; a fold counts as correct
    when the actually-chosen item is ranked strictly highest in its set.
    Ties in accuracy resolve to the smallest step size. With fewer than two
    records the default step size is returned.
    """
    if len(history) < 2:
        return DEFAULT_ETA
    deltas = [compute_delta(r.feats, r.chosen).delta for r in history]
    best_eta = None
    best_score = -1.0
    for eta in sorted(grid):
        correct = 0
        for s, rec in enumerate(history):
            w = np.zeros_like(deltas[0])
            for r, delta in enumerate(deltas):
                if r != s:
                    w = w + eta * delta
            u = rec.feats @ w
            chosen = u[rec.chosen - 1]
            rest = np.delete(u, rec.chosen - 1)
            if rest.size == 0 or chosen > rest.max():
                correct += 1
        score = correct / len(history)
        if score > best_score + 1e-12:
            best_score = score
            best_eta = eta
    return float(best_eta)


def replay_weights(etas: Iterable[float], deltas: Iterable[np.ndarray], d: int) -> np.ndarray:
    """Reconstruct final weights from an (eta, Delta) sequence."""
    w = np.zeros(d)
    for eta, delta in zip(etas, deltas):
        w = w + eta * np.asarray(delta, dtype=float)
    return w


class UserChannel(Protocol):
    """Asynchronous boundary to the (real or simulated) user."""

    def context(self, t: int) -> Context: ...

    def choose(self, x: Context, query: QuerySet, feats: np.ndarray) -> int: ...


@dataclass
class TraceRow:
    """One iteration of a session, serializable as a JSON line."""

    t: int
    gamma: float
    eta: float
    delta_norm: float
    chosen_index: int  # 1-based, matching [k] notation
    query_features: list[list[float]]
    diagnostics: dict[str, Any]
    regret: float | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": self.t,
                "gamma": self.gamma,
                "eta": self.eta,
                "delta_norm": self.delta_norm,
                "chosen_index": self.chosen_index,
                "query_features": self.query_features,
                "diagnostics": self.diagnostics,
                "regret": self.regret,
            }
        )

    @staticmethod
    def from_json(line: str) -> "TraceRow":
        doc = json.loads(line)
        return TraceRow(**doc)


def write_trace(rows: Iterable[TraceRow], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(row.to_json() + "\n")


def read_trace(path) -> list[TraceRow]:
    with open(path, encoding="utf-8") as fh:
        return [TraceRow.from_json(line) for line in fh if line.strip()]


class Session:
    """One elicitation session; owns its state, never shares it."""

    def __init__(
        self,
        spec: DomainSpec,
        k: int,
        config: SolverConfig | str = "bnb",
        *,
        strategy: str = "cp",
        adapt_eta: bool = True,
        eta: float = DEFAULT_ETA,
        eta_grid: Iterable[float] = ETA_GRID,
        seed: int = 0,
    ) -> None:
        if k < 2:
            raise ValueError(f"query size k must be >= 2, got {k}")
        if strategy not in ("cp", "random"):
            raise ValueError(f"unknown strategy {strategy!r}")
        self.spec = spec
        self.k = k
        self.config = (
            config if isinstance(config, SolverConfig) else SolverConfig(backend=config)
        )
        self.strategy = strategy
        self.adapt_eta = adapt_eta
        self.eta_grid = tuple(eta_grid)
        self.state = SessionState(d=spec.d, eta=eta, seed=seed)
        self._rng = np.random.default_rng(seed)

    def propose(self, x: Context) -> QuerySelection:
        """Select the query set for the current iteration."""
        if self.strategy == "random":
            return random_query(self.spec, x, self.k, self._rng)
        gamma = gamma_schedule(self.state.t)
        return select_query(self.spec, x, self.state.w, self.k, gamma, self.config)

    def observe(self, x: Context, selection: QuerySelection, chosen: int) -> UpdateDelta:
        """Apply the Perceptron update for the user's choice."""
        if self.adapt_eta and self.state.t >= 3:
            self.state.eta = adapt_step_size(self.state.history, self.eta_grid)
        update = compute_delta(selection.features, chosen)
        self.state.history.append(
            HistoryRecord(
                selection.features, chosen, self.state.eta, x.label
            )
        )
        apply_update(self.state, update)
        return update


def run_elicitation(
    spec: DomainSpec,
    channel: UserChannel,
    T: int,
    k: int,
    config: SolverConfig | str = "bnb",
    *,
    seed: int = 0,
    strategy: str = "cp",
    adapt_eta: bool = True,
    eta: float = DEFAULT_ETA,
    early_stop: bool = False,
    evaluator: Callable[[Context, QuerySelection, UpdateDelta, np.ndarray, float], dict] | None = None,
) -> list[TraceRow]:
    """Run the receive-context / select-query / observe-choice / update loop.

    The evaluator, when given, computes per-iteration diagnostics (regret and
    theory quantities, requiring the hidden true weights); the update path
    itself never sees them. With early_stop the loop ends once the evaluator
    reports zero regret.
    """
    if T < 1:
        raise ValueError("horizon T must be >= 1")
    session = Session(
        spec, k, config, strategy=strategy, adapt_eta=adapt_eta, eta=eta, seed=seed
    )
    rows: list[TraceRow] = []
    for _ in range(T):
        t = session.state.t
        x = channel.context(t)
        selection = session.propose(x)
        chosen = channel.choose(x, selection.query, selection.features)
        w_before = session.state.w
        update = session.observe(x, selection, chosen)
        eta_used = session.state.history[-1].eta
        diagnostics: dict[str, Any] = {
            "delta_value": selection.delta_value,
            "mu_value": selection.mu_value,
            "solver_status": selection.status,
            "wall_ms": selection.wall_time * 1000.0,
            "gain_est": float(w_before @ update.delta),
        }
        regret = None
        if evaluator is not None:
            extra = evaluator(x, selection, update, w_before, eta_used)
            regret = extra.pop("regret", None)
            diagnostics.update(extra)
        rows.append(
            TraceRow(
                t=t,
                gamma=selection.gamma,
                eta=eta_used,
                delta_norm=float(np.linalg.norm(update.delta)),
                chosen_index=chosen,
                query_features=np.asarray(selection.features).tolist(),
                diagnostics=diagnostics,
                regret=regret,
            )
        )
        if early_stop and regret is not None and regret <= 1e-9:
            break
    return rows
