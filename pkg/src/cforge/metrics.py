"""Regret measurement and theory diagnostics (alpha, beta, M, regret bound)."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import Context, DomainSpec
from .perceptron import TraceRow, UpdateDelta
from .query import QuerySelection, argmax_utility
from .solver import SolverConfig
from .users import (
    SimulatedUser,
    choice_distribution,
    deltas_for_choices,
    expected_estimated_gain,
)

ZERO_GAIN_TOL = 1e-9  # "expected uninformative" threshold

CSV_COLUMNS = [
    "user_id",
    "t",
    "regret",
    "avg_regret",
    "wc_regret",
    "gain_true",
    "gain_est",
    "eta",
    "gamma",
    "solver_status",
    "wall_ms",
]


def instantaneous_regret(
    w_star: np.ndarray,
    spec: DomainSpec,
    x: Context,
    feats: np.ndarray,
    config: SolverConfig | str = "exhaustive",
    true_optimum: float | None = None,
) -> float:
    """True-utility gap between the best feasible configuration and the best
    shown option; zero iff the query set contains a true optimum."""
    w_star = np.asarray(w_star, dtype=float)
    if true_optimum is None:
        _, true_optimum = argmax_utility(spec, x, w_star, config)
    gap = true_optimum - float((np.asarray(feats) @ w_star).max())
    return max(0.0, gap)


def worst_case_regret(
    w_star: np.ndarray,
    spec: DomainSpec,
    x: Context,
    feats: np.ndarray,
    config: SolverConfig | str = "exhaustive",
    true_optimum: float | None = None,
) -> float:
    """Regret with respect to the worst object in the query set."""
    w_star = np.asarray(w_star, dtype=float)
    if true_optimum is None:
        _, true_optimum = argmax_utility(spec, x, w_star, config)
    return max(0.0, true_optimum - float((np.asarray(feats) @ w_star).min()))


def average_regret(regrets: Sequence[float]) -> float:
    if len(regrets) == 0:
        raise ValueError("cannot average an empty regret trace")
    return float(np.mean(regrets))


def bound_value(
    radius: float,
    w_star_norm: float,
    alpha: float,
    beta: float,
    eta: float,
    m_count: float,
    T: int,
) -> float:
    """Expected average regret bound:
    sqrt(2*beta/eta + 4R^2) * ||w*|| / (alpha * sqrt(T)) + 2R ||w*|| M / T."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if T < 1:
        raise ValueError("T must be >= 1")
    if eta <= 0:
        raise ValueError("eta must be positive")
    radicand = 2.0 * beta / eta + 4.0 * radius**2
    if radicand < 0:
        raise ValueError("negative radicand in bound expression")
    return float(
        np.sqrt(radicand) * w_star_norm / (alpha * np.sqrt(T))
        + 2.0 * radius * w_star_norm * m_count / T
    )


class TheoryEvaluator:
    """Per-iteration diagnostics against a known simulated user.

    Computes regret plus the exact (distribution-summed, not sampled)
    expected utility gains used by the theory checks. Runs outside the
    learning path; the update rule never sees these values.
    """

    def __init__(
        self,
        spec: DomainSpec,
        user: SimulatedUser,
        config: SolverConfig | str = "exhaustive",
    ) -> None:
        self.spec = spec
        self.user = user
        self.config = config
        self._optima: dict[Context, float] = {}

    def true_optimum(self, x: Context) -> float:
        if x not in self._optima:
            _, value = argmax_utility(self.spec, x, self.user.w_star, self.config)
            self._optima[x] = value
        return self._optima[x]

    def choice_probs(self, feats: np.ndarray) -> np.ndarray:
        u = self.user.utilities(feats)
        if self.user.noiseless:
            p = np.zeros(len(u))
            p[int(np.argmax(u))] = 1.0
            return p
        return choice_distribution(self.user, feats)

    def __call__(
        self,
        x: Context,
        selection: QuerySelection,
        update: UpdateDelta,
        w_before: np.ndarray,
        eta: float,
    ) -> dict:
        feats = selection.features
        opt = self.true_optimum(x)
        u = self.user.utilities(feats)
        p = self.choice_probs(feats)
        gains = deltas_for_choices(feats) @ self.user.w_star
        return {
            "regret": max(0.0, opt - float(u.max())),
            "wc_regret": max(0.0, opt - float(u.min())),
            "gain_true": float(self.user.w_star @ update.delta),
            "expected_gain_true": float(p @ gains),
            "expected_gain_est": expected_estimated_gain(w_before, p, feats),
        }


@dataclass(frozen=True)
class BoundDiagnostics:
    """Empirical constants of the regret bound, measured on one trace."""

    alpha_hat: float | None  # undefined when no informative iteration occurred
    beta_hat: float
    m_hat: int
    radius: float
    w_star_norm: float
    eta: float
    T: int

    @property
    def bound(self) -> float | None:
        if self.alpha_hat is None:
            return None
        return bound_value(
            self.radius,
            self.w_star_norm,
            self.alpha_hat,
            self.beta_hat,
            self.eta,
            self.m_hat,
            self.T,
        )


def diagnostics(
    rows: Sequence[TraceRow],
    radius: float,
    w_star_norm: float,
) -> BoundDiagnostics:
    """Empirical alpha/beta/M from a trace recorded with a TheoryEvaluator.

    alpha_hat is the minimum gain-to-worst-case-regret ratio over informative
    iterations; beta_hat the mean exact expected estimated gain; m_hat the
    count of expected-uninformative iterations.
    """
    ratios = []
    est_gains = []
    m_hat = 0
    etas = []
    for row in rows:
        diag = row.diagnostics
        gain = diag["expected_gain_true"]
        wc = diag["wc_regret"]
        est_gains.append(diag["expected_gain_est"])
        etas.append(row.eta)
        if abs(gain) <= ZERO_GAIN_TOL:
            m_hat += 1
        elif gain > ZERO_GAIN_TOL and wc > ZERO_GAIN_TOL:
            ratios.append(min(1.0, gain / wc))
    alpha_hat = min(ratios) if ratios else None
    return BoundDiagnostics(
        alpha_hat=alpha_hat,
        beta_hat=float(np.mean(est_gains)),
        m_hat=m_hat,
        radius=radius,
        w_star_norm=w_star_norm,
        eta=float(np.mean(etas)),
        T=len(rows),
    )


def trace_csv_rows(user_id: int, rows: Sequence[TraceRow]) -> list[dict]:
    out = []
    total = 0.0
    for i, row in enumerate(rows, start=1):
        regret = row.regret if row.regret is not None else float("nan")
        total += regret
        out.append(
            {
                "user_id": user_id,
                "t": row.t,
                "regret": regret,
                "avg_regret": total / i,
                "wc_regret": row.diagnostics.get("wc_regret", float("nan")),
                "gain_true": row.diagnostics.get("gain_true", float("nan")),
                "gain_est": row.diagnostics.get("gain_est", float("nan")),
                "eta": row.eta,
                "gamma": row.gamma,
                "solver_status": row.diagnostics.get("solver_status", ""),
                "wall_ms": row.diagnostics.get("wall_ms", float("nan")),
            }
        )
    return out


def write_csv(path, rows: Iterable[Mapping], columns: Sequence[str] | None = None) -> None:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else CSV_COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def plot_regret_curves(path, curves: Mapping[str, tuple]) -> None:
    """Median regret vs iteration with a +-std band; one line per label."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (ts, median, std) in curves.items():
        ts = np.asarray(ts)
        median = np.asarray(median)
        std = np.asarray(std)
        ax.plot(ts, median, label=label)
        ax.fill_between(ts, median - std, median + std, alpha=0.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("median regret")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_runtime_curves(path, curves: Mapping[str, tuple]) -> None:
    """Median cumulative runtime (seconds) vs iteration."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (ts, cum) in curves.items():
        ax.plot(np.asarray(ts), np.asarray(cum), label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("cumulative runtime [s]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
