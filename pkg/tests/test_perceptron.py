"""Perceptron update algebra, step-size adaptation, traces, sessions."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cforge.benchmarks import build_synthetic
from cforge.domain import EMPTY_CONTEXT
from cforge.perceptron import (
    DEFAULT_ETA,
    ETA_GRID,
    HistoryRecord,
    Session,
    SessionState,
    TraceRow,
    UpdateDelta,
    adapt_step_size,
    apply_update,
    compute_delta,
    read_trace,
    replay_weights,
    run_elicitation,
    write_trace,
)
from cforge.users import SimulatedUser, respond

feats_strategy = arrays(
    np.float64,
    st.tuples(st.integers(2, 5), st.integers(1, 6)),
    elements=st.floats(-50, 50),
)


def test_delta_hand_example():
    feats = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    up = compute_delta(feats, 1)
    # (1,0) - ((0,1)+(0,0))/2 computed independently
    expected = feats[0] - (feats[1] + feats[2]) / 2.0
    assert np.array_equal(up.delta, np.array([1.0, -0.5]))
    assert np.array_equal(up.delta, expected)


def test_delta_identical_features_is_zero():
    feats = np.array([[2.0, 3.0], [2.0, 3.0]])
    assert np.array_equal(compute_delta(feats, 1).delta, np.zeros(2))


def test_delta_index_errors():
    feats = np.zeros((3, 2))
    with pytest.raises(IndexError):
        compute_delta(feats, 0)
    with pytest.raises(IndexError):
        compute_delta(feats, 4)
    with pytest.raises(ValueError):
        compute_delta(np.zeros((1, 2)), 1)


@given(feats_strategy)
@settings(max_examples=60, deadline=None)
def test_delta_choices_sum_to_zero(feats):
    """Uniformly weighted sum of Delta over all possible choices is 0."""
    k = feats.shape[0]
    total = sum(compute_delta(feats, i + 1).delta for i in range(k))
    assert np.allclose(total, 0.0, atol=1e-7)


@given(feats_strategy, st.integers(0, 10))
@settings(max_examples=60, deadline=None)
def test_shared_coordinate_gives_zero_delta_coordinate(feats, j):
    j = j % feats.shape[1]
    feats[:, j] = feats[0, j]
    for chosen in range(1, feats.shape[0] + 1):
        assert compute_delta(feats, chosen).delta[j] == pytest.approx(0.0, abs=1e-9)


def test_apply_update_exact():
    state = SessionState(d=2, eta=0.5)
    assert np.array_equal(state.w, np.zeros(2))
    delta = np.array([1.0, -0.5])
    apply_update(state, UpdateDelta(delta, delta, np.zeros(2)))
    assert np.array_equal(state.w, 0.5 * delta)
    assert state.t == 2
    before = state.w.copy()
    apply_update(state, UpdateDelta(np.zeros(2), np.zeros(2), np.zeros(2)))
    assert np.array_equal(state.w, before)


def test_replay_identity_bit_for_bit():
    rng = np.random.default_rng(0)
    state = SessionState(d=4)
    etas, deltas = [], []
    for _ in range(30):
        state.eta = float(rng.choice(ETA_GRID))
        feats = rng.normal(size=(3, 4))
        up = compute_delta(feats, int(rng.integers(1, 4)))
        etas.append(state.eta)
        deltas.append(up.delta)
        apply_update(state, up)
    replay = replay_weights(etas, deltas, 4)
    assert np.array_equal(replay, state.w)


def test_adapt_default_below_two_records():
    assert adapt_step_size([]) == DEFAULT_ETA
    rec = HistoryRecord(np.zeros((2, 2)), 1, 1.0)
    assert adapt_step_size([rec]) == DEFAULT_ETA


def test_adapt_ties_resolve_to_smallest():
    """Constant-step replay is scale invariant, so the whole grid ties and
    the smallest step size wins."""
    rng = np.random.default_rng(1)
    history = [
        HistoryRecord(rng.normal(size=(3, 4)), int(rng.integers(1, 4)), 1.0)
        for _ in range(6)
    ]
    assert adapt_step_size(history) == min(ETA_GRID)


@given(st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_adapt_scale_invariance(seed):
    """Rescaling the candidate grid never changes LOO rankings: accuracy at
    step c*eta equals accuracy at eta, for any c > 0."""
    rng = np.random.default_rng(seed)
    history = [
        HistoryRecord(rng.normal(size=(3, 3)), int(rng.integers(1, 4)), 1.0)
        for _ in range(4)
    ]
    assert adapt_step_size(history, (1.0,)) == 1.0
    assert adapt_step_size(history, (0.001, 1000.0)) == 0.001


class _ScriptedChannel:
    def __init__(self, user):
        self.user = user

    def context(self, t):
        return EMPTY_CONTEXT

    def choose(self, x, query, feats):
        return respond(self.user, feats)


def test_run_elicitation_deterministic():
    spec = build_synthetic(3)
    rng = np.random.default_rng(2)
    w_star = rng.uniform(1, 100, size=spec.d)

    def rows_for(seed):
        user = SimulatedUser(w_star, rng=np.random.default_rng(seed))
        return run_elicitation(
            spec, _ScriptedChannel(user), 8, 2, "exhaustive", seed=0, adapt_eta=False
        )

    a, b = rows_for(5), rows_for(5)
    assert [r.chosen_index for r in a] == [r.chosen_index for r in b]
    assert all(
        np.array_equal(np.asarray(x.query_features), np.asarray(y.query_features))
        for x, y in zip(a, b)
    )


def test_run_elicitation_early_stop():
    spec = build_synthetic(3)
    rng = np.random.default_rng(3)
    w_star = rng.uniform(1, 100, size=spec.d)
    user = SimulatedUser(w_star, noiseless=True)
    phis = np.array([spec.featurize(EMPTY_CONTEXT, y) for y in spec.enumerate()])
    opt = float((phis @ w_star).max())

    def evaluator(x, selection, update, w_before, eta):
        return {"regret": max(0.0, opt - float((selection.features @ w_star).max()))}

    rows = run_elicitation(
        spec,
        _ScriptedChannel(user),
        25,
        2,
        "exhaustive",
        adapt_eta=False,
        early_stop=True,
        evaluator=evaluator,
    )
    assert len(rows) <= 25
    assert rows[-1].regret == 0.0
    assert all(r.regret >= 0.0 for r in rows)


def test_trace_round_trip(tmp_path):
    rows = [
        TraceRow(
            t=1,
            gamma=1.0,
            eta=0.5,
            delta_norm=1.25,
            chosen_index=2,
            query_features=[[1.0, 0.0], [0.0, 1.0]],
            diagnostics={"solver_status": "optimal"},
            regret=None,
        ),
        TraceRow(
            t=2,
            gamma=0.5,
            eta=1.0,
            delta_norm=0.0,
            chosen_index=1,
            query_features=[[0.0, 0.0], [1.0, 1.0]],
            diagnostics={},
            regret=3.5,
        ),
    ]
    path = tmp_path / "trace.jsonl"
    write_trace(rows, path)
    again = read_trace(path)
    assert again == rows


def test_session_validation():
    spec = build_synthetic(3)
    with pytest.raises(ValueError):
        Session(spec, 1)
    with pytest.raises(ValueError):
        Session(spec, 2, strategy="greedy")
    with pytest.raises(ValueError):
        run_elicitation(spec, _ScriptedChannel(None), 0, 2)
