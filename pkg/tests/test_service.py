"""Session service: state machine, idempotency, persistence, audit replay."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cforge.service import create_app


@pytest.fixture
def client(tmp_path):
    return TestClient(create_app(data_dir=tmp_path / "sessions"))


def _create(client, domain="synthetic-r4", k=2, **extra):
    r = client.post("/sessions", json={"domain": domain, "k": k, **extra})
    assert r.status_code == 201, r.text
    return r.json()


def test_domains_listing(client):
    doc = client.get("/domains").json()
    ids = {d["id"] for d in doc}
    assert {"synthetic-r4", "pc", "trip"} <= ids
    trip = next(d for d in doc if d["id"] == "trip")
    assert trip["contextual"]
    assert len(trip["cities"]) >= 2


def test_create_session(client):
    doc = _create(client)
    assert doc["state"] == "awaiting-context"
    assert doc["t"] == 1
    got = client.get(f"/sessions/{doc['id']}").json()
    assert got["t"] == 1
    assert client.post("/sessions", json={"domain": "nope", "k": 2}).status_code == 404
    assert (
        client.post("/sessions", json={"domain": "pc", "k": 1}).status_code == 422
    )
    assert client.get("/sessions/does-not-exist").status_code == 404


def test_state_machine(client):
    sid = _create(client, k=3)["id"]
    # choice before query -> 409
    assert (
        client.post(f"/sessions/{sid}/choice", json={"chosen": 1}).status_code == 409
    )
    q = client.post(f"/sessions/{sid}/query", json={})
    assert q.status_code == 200
    doc = q.json()
    assert doc["state"] == "awaiting-choice"
    opts = doc["query"]["options"]
    assert len(opts) == 3
    assert [o["index"] for o in opts] == [1, 2, 3]
    assert doc["query"]["diagnostics"]["gamma"] == 1.0  # 1/t at t=1
    # second query without a choice -> 409
    assert client.post(f"/sessions/{sid}/query", json={}).status_code == 409
    # out-of-range choices -> 422
    assert (
        client.post(f"/sessions/{sid}/choice", json={"chosen": 0}).status_code == 422
    )
    assert (
        client.post(f"/sessions/{sid}/choice", json={"chosen": 4}).status_code == 422
    )
    ch = client.post(f"/sessions/{sid}/choice", json={"chosen": 2})
    assert ch.status_code == 200
    assert ch.json()["t"] == 2
    assert ch.json()["state"] == "awaiting-context"
    q2 = client.post(f"/sessions/{sid}/query", json={})
    assert q2.json()["query"]["diagnostics"]["gamma"] == 0.5  # 1/t at t=2


def test_horizon_finishes_session(client):
    sid = _create(client, T=2)["id"]
    for _ in range(2):
        client.post(f"/sessions/{sid}/query", json={})
        client.post(f"/sessions/{sid}/choice", json={"chosen": 1})
    doc = client.get(f"/sessions/{sid}").json()
    assert doc["state"] == "finished"
    assert client.post(f"/sessions/{sid}/query", json={}).status_code == 409


def test_idempotent_choice(client):
    sid = _create(client)["id"]
    client.post(f"/sessions/{sid}/query", json={})
    first = client.post(
        f"/sessions/{sid}/choice", json={"chosen": 2},
        headers={"Idempotency-Key": "abc"},
    )
    dup = client.post(
        f"/sessions/{sid}/choice", json={"chosen": 2},
        headers={"Idempotency-Key": "abc"},
    )
    assert dup.status_code == 200
    assert dup.json() == first.json()
    trace = client.get(f"/sessions/{sid}/trace").json()
    assert len(trace["rows"]) == 1  # no double update


def test_trip_context_enforced(client):
    sid = _create(client, domain="trip", k=2)["id"]
    q = client.post(
        f"/sessions/{sid}/query", json={"must_visit": ["avila", "corte"]}
    )
    assert q.status_code == 200
    for opt in q.json()["query"]["options"]:
        steps = list(opt["values"].values())
        assert "avila" in steps and "corte" in steps


def test_unknown_city_rejected(client):
    sid = _create(client, domain="trip", k=2)["id"]
    q = client.post(f"/sessions/{sid}/query", json={"must_visit": ["atlantis"]})
    assert q.status_code == 422


def test_audit_replay_matches_weights(client):
    sid = _create(client, domain="pc", k=3)["id"]
    for i in range(4):
        client.post(f"/sessions/{sid}/query", json={})
        client.post(f"/sessions/{sid}/choice", json={"chosen": (i % 3) + 1})
    trace = client.get(f"/sessions/{sid}/trace").json()
    assert len(trace["rows"]) == 4
    assert np.allclose(trace["weights"], trace["replay"], atol=1e-12)


def test_hidden_state_never_exposed(client):
    sid = _create(client, domain="pc", k=2)["id"]
    q = client.post(f"/sessions/{sid}/query", json={})
    client.post(f"/sessions/{sid}/choice", json={"chosen": 1})
    for payload in (
        q.text,
        client.get(f"/sessions/{sid}").text,
    ):
        assert "w_star" not in payload
        assert "regret" not in payload
    trace = client.get(f"/sessions/{sid}/trace").json()
    assert "w_star" not in trace
    # regret is nullable in the row schema and must stay null here: the
    # service has no access to true weights
    assert all(row["regret"] is None for row in trace["rows"])


def test_restart_replays_persisted_sessions(tmp_path):
    data = tmp_path / "sessions"
    app = create_app(data_dir=data)
    c = TestClient(app)
    sid = _create(c, domain="synthetic-r4", k=2)["id"]
    for _ in range(3):
        c.post(f"/sessions/{sid}/query", json={})
        c.post(f"/sessions/{sid}/choice", json={"chosen": 2},
               headers={"Idempotency-Key": f"k{_}"})
    before = c.get(f"/sessions/{sid}/trace").json()

    c2 = TestClient(create_app(data_dir=data))
    after = c2.get(f"/sessions/{sid}/trace").json()
    assert after["rows"] == before["rows"]
    assert np.allclose(after["weights"], before["weights"], atol=1e-12)
    doc = c2.get(f"/sessions/{sid}").json()
    assert doc["t"] == 4
    assert doc["state"] == "awaiting-context"
    # duplicate of a pre-restart key does not double-update
    dup = c2.post(f"/sessions/{sid}/choice", json={"chosen": 1},
                  headers={"Idempotency-Key": "k2"})
    assert dup.status_code == 200
    assert len(c2.get(f"/sessions/{sid}/trace").json()["rows"]) == 3
