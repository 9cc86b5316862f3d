"""Query selection: gamma schedule, y1 optimality, distinctness, objective."""

import itertools

import numpy as np
import pytest

from cforge.benchmarks import build_synthetic
from cforge.domain import DomainSpec, EMPTY_CONTEXT, FeatureRow, boolean
from cforge.errors import DomainTooSmallError, SchemaError
from cforge.query import (
    argmax_utility,
    distinctness_epsilon,
    gamma_schedule,
    random_query,
    select_query,
)


@pytest.fixture(scope="module")
def r3():
    return build_synthetic(3)


def _catalog(spec):
    ys = list(spec.enumerate())
    phis = np.array([spec.featurize(EMPTY_CONTEXT, y) for y in ys])
    return ys, phis


def test_gamma_schedule():
    assert gamma_schedule(1) == 1.0
    assert gamma_schedule(2) == 0.5
    assert gamma_schedule(10) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        gamma_schedule(0)


def test_argmax_matches_enumeration(r3):
    rng = np.random.default_rng(0)
    for _ in range(10):
        w = rng.normal(size=r3.d)
        for backend in ("exhaustive", "bnb"):
            y, val = argmax_utility(r3, EMPTY_CONTEXT, w, backend)
            _, phis = _catalog(r3)
            assert val == pytest.approx(float((phis @ w).max()), abs=1e-6)
            assert r3.feasible(EMPTY_CONTEXT, y)


def test_argmax_unit_weight():
    spec = build_synthetic(4)
    w = np.zeros(spec.d)
    w[[f.name for f in spec.features].index("attr1=2")] = 1.0
    y, val = argmax_utility(spec, EMPTY_CONTEXT, w, "exhaustive")
    assert y["attr1"] == "2"
    assert val == 1.0


def test_argmax_zero_weights(r3):
    y, val = argmax_utility(r3, EMPTY_CONTEXT, np.zeros(r3.d), "exhaustive")
    assert val == 0.0
    assert r3.feasible(EMPTY_CONTEXT, y)


@pytest.mark.parametrize("backend", ["exhaustive", "bnb"])
def test_gamma_zero_exploits(r3, backend):
    """gamma=0, k=2: y2 is the best remaining distinct configuration."""
    rng = np.random.default_rng(3)
    w = rng.normal(size=r3.d)
    sel = select_query(r3, EMPTY_CONTEXT, w, 2, 0.0, backend)
    ys, phis = _catalog(r3)
    utils = phis @ w
    best = utils.max()
    assert float(w @ sel.features[0]) == pytest.approx(best, abs=1e-6)
    runner_up = max(
        u
        for u, phi in zip(utils, phis)
        if np.abs(phi - sel.features[0]).sum() >= 1.0 - 1e-9
    )
    assert float(w @ sel.features[1]) == pytest.approx(runner_up, abs=1e-6)


@pytest.mark.parametrize("backend", ["exhaustive", "bnb"])
def test_gamma_one_maximizes_distance(r3, backend):
    """gamma=1, w=0: objective equals the brute-force max L1 distance."""
    w = np.zeros(r3.d)
    sel = select_query(r3, EMPTY_CONTEXT, w, 2, 1.0, backend)
    _, phis = _catalog(r3)
    best = max(
        float(np.abs(a - b).sum()) for a, b in itertools.combinations(phis, 2)
    )
    assert sel.objective == pytest.approx(best, abs=1e-6)
    assert sel.delta_value == pytest.approx(best, abs=1e-6)


def test_selection_invariants(r3):
    rng = np.random.default_rng(7)
    eps = distinctness_epsilon(r3)
    assert eps == 1.0
    for _ in range(5):
        w = rng.normal(size=r3.d)
        gamma = float(rng.random())
        sel = select_query(r3, EMPTY_CONTEXT, w, 3, gamma, "exhaustive")
        feats = sel.features
        # pairwise distinct
        for i, j in itertools.combinations(range(3), 2):
            assert np.abs(feats[i] - feats[j]).sum() >= eps - 1e-9
        # y1 optimal
        _, best = argmax_utility(r3, EMPTY_CONTEXT, w, "exhaustive")
        assert float(w @ feats[0]) == pytest.approx(best, abs=1e-6)
        # members feasible
        for y in sel.query.configurations:
            assert r3.feasible(EMPTY_CONTEXT, y)
        # objective decomposition
        assert sel.objective == pytest.approx(
            gamma * sel.delta_value + (1 - gamma) * sel.mu_value, abs=1e-9
        )


def test_gamma_monotone_delta(r3):
    """Raising gamma never decreases the optimal delta component."""
    rng = np.random.default_rng(11)
    w = rng.normal(size=r3.d)
    deltas = [
        select_query(r3, EMPTY_CONTEXT, w, 2, g, "exhaustive").delta_value
        for g in (0.0, 0.25, 0.5, 0.75, 1.0)
    ]
    assert all(b >= a - 1e-9 for a, b in zip(deltas, deltas[1:]))


def test_true_weights_contain_true_optimum(r3):
    """With w = w*, the query set contains a true optimal configuration."""
    rng = np.random.default_rng(13)
    for _ in range(5):
        w_star = rng.normal(size=r3.d)
        sel = select_query(r3, EMPTY_CONTEXT, w_star, 2, 0.5, "exhaustive")
        _, phis = _catalog(r3)
        best = float((phis @ w_star).max())
        assert float((sel.features @ w_star).max()) == pytest.approx(best, abs=1e-9)


def test_domain_too_small():
    spec = DomainSpec(
        [boolean("x")], features=[FeatureRow("x", (("x", 1.0),))]
    )
    with pytest.raises(DomainTooSmallError):
        select_query(spec, EMPTY_CONTEXT, np.zeros(1), 3, 0.5, "exhaustive")
    with pytest.raises(DomainTooSmallError):
        select_query(spec, EMPTY_CONTEXT, np.zeros(1), 3, 0.5, "bnb")


def test_validation(r3):
    with pytest.raises(ValueError):
        select_query(r3, EMPTY_CONTEXT, np.zeros(r3.d), 1, 0.5)
    with pytest.raises(ValueError):
        select_query(r3, EMPTY_CONTEXT, np.zeros(r3.d), 2, 1.5)
    with pytest.raises(SchemaError):
        select_query(r3, EMPTY_CONTEXT, np.zeros(r3.d + 1), 2, 0.5)


def test_random_query_baseline(r3):
    rng = np.random.default_rng(5)
    sel = random_query(r3, EMPTY_CONTEXT, 4, rng)
    assert sel.query.k == 4
    assert sel.status == "random"
    for i, j in itertools.combinations(range(4), 2):
        assert np.abs(sel.features[i] - sel.features[j]).sum() >= 1.0 - 1e-9
    # deterministic under the same rng state
    sel2 = random_query(r3, EMPTY_CONTEXT, 4, np.random.default_rng(5))
    assert np.array_equal(sel.features, sel2.features)
