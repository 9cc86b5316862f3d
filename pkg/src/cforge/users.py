"""Simulated users: hidden weights, Plackett-Luce choices, reasonableness.

A simulated user holds hidden true weights w* and answers choice queries
by sampling from P(y_i | Q) = exp(lam * u*(y_i)) / sum_j exp(lam * u*(y_j)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import SchemaError

REASONABLE_TOL = 1e-12


@dataclass
class SimulatedUser:
    """Plackett-Luce responder with hidden true weights.

    Mutable only through its rng stream; confine each user to one session.
    """

    w_star: np.ndarray
    lam: float = 1.0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    noiseless: bool = False

    def __post_init__(self) -> None:
        self.w_star = np.asarray(self.w_star, dtype=float)
        if not np.all(np.isfinite(self.w_star)):
            raise SchemaError("w* must be finite")
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise SchemaError("lambda must be a finite positive real")

    def utilities(self, feats: np.ndarray) -> np.ndarray:
        return np.asarray(feats, dtype=float) @ self.w_star


def choice_probabilities(utilities: np.ndarray, lam: float) -> np.ndarray:
    """Softmax with max-subtraction; positive entries summing to 1."""
    z = lam * np.asarray(utilities, dtype=float)
    z = z - z.max()
    p = np.exp(z)
    return p / p.sum()


def choice_distribution(user: SimulatedUser, feats: np.ndarray) -> np.ndarray:
    """Probability of each of the k options being chosen."""
    return choice_probabilities(user.utilities(feats), user.lam)


def respond(user: SimulatedUser, feats: np.ndarray) -> int:
    """Sample a chosen option; returns a 1-based index."""
    u = user.utilities(feats)
    if user.noiseless:
        return int(np.argmax(u)) + 1
    p = choice_probabilities(u, user.lam)
    return int(user.rng.choice(len(p), p=p)) + 1


def is_reasonable(probs: np.ndarray, utilities: np.ndarray, tol: float = REASONABLE_TOL) -> bool:
    """Literal biconditional of the reasonable-user definition:
    P(y) >= P(y') iff u*(y) >= u*(y') for every ordered pair."""
    p = np.asarray(probs, dtype=float)
    u = np.asarray(utilities, dtype=float)
    for i in range(len(p)):
        for j in range(len(p)):
            if (p[i] >= p[j] - tol) != (u[i] >= u[j] - tol):
                return False
    return True


def check_reasonable(user: SimulatedUser, feats: np.ndarray) -> bool:
    """Monotonicity of choice probability in true utility on this query set."""
    u = user.utilities(feats)
    return is_reasonable(choice_probabilities(u, user.lam), u)


def deltas_for_choices(feats: np.ndarray) -> np.ndarray:
    """Delta(i) = phi_i - mean of the other feature vectors, for each i."""
    feats = np.asarray(feats, dtype=float)
    k = feats.shape[0]
    total = feats.sum(axis=0)
    others_mean = (total[None, :] - feats) / (k - 1)
    return feats - others_mean


def expected_utility_gain(user: SimulatedUser, feats: np.ndarray) -> float:
    """Exact expectation of <w*, Delta> over the k possible choices."""
    p = choice_distribution(user, feats)
    gains = deltas_for_choices(feats) @ user.w_star
    return float(p @ gains)


def expected_estimated_gain(w: np.ndarray, probs: np.ndarray, feats: np.ndarray) -> float:
    """Exact expectation of <w, Delta> under the given choice distribution."""
    gains = deltas_for_choices(feats) @ np.asarray(w, dtype=float)
    return float(np.asarray(probs) @ gains)


# ---------------------------------------------------------------------------
# populations


@dataclass(frozen=True)
class PopulationDescriptor:
    """Serializable recipe for regenerating a user population bit-identically."""

    kind: str  # "uniform" | "normal"
    params: tuple[float, float]  # (lo, hi) or (mean, sd)
    n: int
    d: int
    seed: int

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": list(self.params),
            "n": self.n,
            "d": self.d,
            "seed": self.seed,
        }

    @staticmethod
    def from_json_dict(doc: dict[str, Any]) -> "PopulationDescriptor":
        return PopulationDescriptor(
            doc["kind"], tuple(doc["params"]), doc["n"], doc["d"], doc["seed"]
        )


@dataclass
class UserPopulation:
    descriptor: PopulationDescriptor
    users: list[SimulatedUser]

    def __len__(self) -> int:
        return len(self.users)


def user_rng(seed: int, index: int) -> np.random.Generator:
    """Independent substream for one user, derived from (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_users(
    kind: str,
    params: tuple[float, float],
    n: int,
    d: int,
    seed: int,
    lam: float = 1.0,
    noiseless: bool = False,
) -> UserPopulation:
    """Draw n hidden weight vectors i.i.d. per coordinate."""
    if n < 1:
        raise SchemaError("population size must be >= 1")
    if kind == "uniform":
        lo, hi = params
        if lo > hi:
            raise SchemaError("uniform requires lo <= hi")
    elif kind == "normal":
        _, sd = params
        if sd <= 0:
            raise SchemaError("normal requires sd > 0")
    else:
        raise SchemaError(f"unknown distribution kind {kind!r}")

    users = []
    for i in range(n):
        rng = user_rng(seed, i)
        if kind == "uniform":
            w = rng.uniform(params[0], params[1], size=d)
        else:
            w = rng.normal(params[0], params[1], size=d)
        users.append(SimulatedUser(w, lam=lam, rng=rng, noiseless=noiseless))
    return UserPopulation(PopulationDescriptor(kind, tuple(params), n, d, seed), users)
