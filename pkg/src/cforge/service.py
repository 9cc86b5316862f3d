"""HTTP facade for live elicitation sessions.

Endpoints: POST /sessions, GET /sessions/{id}, POST /sessions/{id}/query,
POST /sessions/{id}/choice, GET /sessions/{id}/trace, GET /domains. A
session is a strict state machine (awaiting-context -> awaiting-choice ->
awaiting-context | finished); choices are 1-based and idempotent under the
Idempotency-Key header. Per-session traces are persisted append-only and
weights are rebuilt by replay on restart. The service never holds or
reveals hidden true weights; the human on the other end is the oracle.
"""

from __future__ import annotations

import functools
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, Header, HTTPException
from pydantic import BaseModel

from .benchmarks import build_pc, build_synthetic, build_trip, must_visit_context
from .domain import Context, DomainSpec, EMPTY_CONTEXT
from .errors import DomainTooSmallError, SchemaError, SolverFailure
from .perceptron import (
    HistoryRecord,
    Session,
    TraceRow,
    compute_delta,
    replay_weights,
)
from .query import QuerySelection
from .solver import DEFAULT_TIMEOUT_S, SolverConfig

AWAITING_CONTEXT = "awaiting-context"
AWAITING_CHOICE = "awaiting-choice"
FINISHED = "finished"


@functools.lru_cache(maxsize=1)
def _shared_specs() -> tuple[DomainSpec, DomainSpec, DomainSpec]:
    return build_synthetic(4), build_pc(), build_trip()


def default_domains() -> dict[str, DomainSpec]:
    # shared spec objects let separate app instances reuse cached catalogs
    synthetic, pc, trip = _shared_specs()
    return {"synthetic-r4": synthetic, "pc": pc, "trip": trip}


class CreateSessionRequest(BaseModel):
    domain: str
    k: int = 2
    T: int | None = None
    eta: float = 1.0
    adapt_eta: bool = True


class QueryRequest(BaseModel):
    must_visit: list[str] | None = None


class ChoiceRequest(BaseModel):
    chosen: int


@dataclass
class ServerSession:
    """One live session plus its pending query and idempotency cache."""

    id: str
    domain_id: str
    spec: DomainSpec
    session: Session
    T: int | None
    state: str = AWAITING_CONTEXT
    pending: QuerySelection | None = None
    pending_context: Context = EMPTY_CONTEXT
    rows: list[TraceRow] = field(default_factory=list)
    idempotency: dict[str, dict] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)
    trace_path: Path | None = None


def _render_option(spec: DomainSpec, config, utility: float, index: int) -> dict:
    return {
        "index": index,
        "values": {name: value for name, value in config.values},
        "estimated_utility": utility,
    }


def _selection_payload(spec: DomainSpec, sel: QuerySelection, w: np.ndarray) -> dict:
    utils = sel.features @ w
    return {
        "options": [
            _render_option(spec, y, float(utils[i]), i + 1)
            for i, y in enumerate(sel.query.configurations)
        ],
        "diagnostics": {
            "gamma": sel.gamma,
            "delta": sel.delta_value,
            "mu": sel.mu_value,
            "solver_status": sel.status,
            "wall_ms": sel.wall_time * 1000.0,
        },
    }


def _summary(s: ServerSession) -> dict:
    doc = {
        "id": s.id,
        "domain": s.domain_id,
        "k": s.session.k,
        "T": s.T,
        "state": s.state,
        "t": s.session.state.t,
        "eta": s.session.state.eta,
    }
    if s.state == AWAITING_CHOICE and s.pending is not None:
        doc["query"] = _selection_payload(s.spec, s.pending, s.session.state.w)
        doc["context"] = {"label": s.pending_context.label}
    return doc


def _domain_payload(domain_id: str, spec: DomainSpec) -> dict:
    return {
        "id": domain_id,
        "d": spec.d,
        "attributes": [
            {"name": a.name, "kind": a.kind, "values": list(a.values or ())}
            for a in spec.attributes
        ],
        "contextual": bool(spec.metadata.get("contextual")),
        "cities": list(spec.metadata.get("cities", ())),
    }


class SessionStore:
    """All live sessions; persistence is an append-only JSONL per session."""

    def __init__(
        self,
        domains: dict[str, DomainSpec] | None = None,
        data_dir: str | Path | None = None,
        config: SolverConfig | None = None,
    ) -> None:
        self.domains = domains if domains is not None else default_domains()
        self.config = config or SolverConfig(backend="exhaustive")
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.sessions: dict[str, ServerSession] = {}
        self._lock = threading.Lock()
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._restore()

    # -- persistence ------------------------------------------------------

    def _append(self, s: ServerSession, doc: dict) -> None:
        if s.trace_path is None:
            return
        with open(s.trace_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(doc) + "\n")

    def _restore(self) -> None:
        for path in sorted(self.data_dir.glob("*.jsonl")):
            with open(path, encoding="utf-8") as fh:
                lines = [json.loads(line) for line in fh if line.strip()]
            if not lines or lines[0].get("type") != "header":
                continue
            head = lines[0]
            if head["domain"] not in self.domains:
                continue
            spec = self.domains[head["domain"]]
            s = ServerSession(
                id=head["id"],
                domain_id=head["domain"],
                spec=spec,
                session=Session(
                    spec,
                    head["k"],
                    self.config,
                    adapt_eta=head["adapt_eta"],
                    eta=head["eta"],
                    seed=head["seed"],
                ),
                T=head["T"],
                trace_path=path,
            )
            for doc in lines[1:]:
                if doc.get("type") != "row":
                    continue
                row = TraceRow(**doc["row"])
                s.rows.append(row)
                feats = np.asarray(row.query_features, dtype=float)
                s.session.state.history.append(
                    HistoryRecord(feats, row.chosen_index, row.eta, None)
                )
                key = doc.get("idempotency_key")
                if key:
                    s.idempotency[key] = {}
            # rebuild weights by replay; t advances one step per row
            etas = [r.eta for r in s.rows]
            deltas = [
                compute_delta(np.asarray(r.query_features), r.chosen_index).delta
                for r in s.rows
            ]
            s.session.state.w = replay_weights(etas, deltas, spec.d)
            s.session.state.t = len(s.rows) + 1
            if s.rows:
                s.session.state.eta = s.rows[-1].eta
            if s.T is not None and s.session.state.t > s.T:
                s.state = FINISHED
            self.sessions[s.id] = s

    # -- operations -------------------------------------------------------

    def create(self, req: CreateSessionRequest) -> ServerSession:
        if req.domain not in self.domains:
            raise HTTPException(404, f"unknown domain {req.domain!r}")
        if req.k < 2:
            raise HTTPException(422, "query size k must be >= 2")
        if req.T is not None and req.T < 1:
            raise HTTPException(422, "horizon T must be >= 1")
        spec = self.domains[req.domain]
        sid = uuid.uuid4().hex[:12]
        s = ServerSession(
            id=sid,
            domain_id=req.domain,
            spec=spec,
            session=Session(
                spec, req.k, self.config, adapt_eta=req.adapt_eta, eta=req.eta
            ),
            T=req.T,
        )
        if self.data_dir is not None:
            s.trace_path = self.data_dir / f"{sid}.jsonl"
        with self._lock:
            self.sessions[sid] = s
        self._append(
            s,
            {
                "type": "header",
                "id": sid,
                "domain": req.domain,
                "k": req.k,
                "T": req.T,
                "eta": req.eta,
                "adapt_eta": req.adapt_eta,
                "seed": 0,
            },
        )
        return s

    def get(self, sid: str) -> ServerSession:
        try:
            return self.sessions[sid]
        except KeyError:
            raise HTTPException(404, f"unknown session {sid!r}") from None

    def query(self, sid: str, req: QueryRequest) -> dict:
        s = self.get(sid)
        with s.lock:
            if s.state != AWAITING_CONTEXT:
                raise HTTPException(409, f"session is {s.state}, not awaiting context")
            x = EMPTY_CONTEXT
            if req.must_visit:
                try:
                    x = must_visit_context(s.spec, req.must_visit)
                except SchemaError as exc:
                    raise HTTPException(422, str(exc)) from None
            try:
                selection = s.session.propose(x)
            except (DomainTooSmallError, SolverFailure) as exc:
                raise HTTPException(
                    422, f"context is infeasible for this domain: {exc}"
                ) from None
            s.pending = selection
            s.pending_context = x
            s.state = AWAITING_CHOICE
            return _summary(s)

    def choice(self, sid: str, req: ChoiceRequest, idem_key: str | None) -> dict:
        s = self.get(sid)
        with s.lock:
            if idem_key and idem_key in s.idempotency:
                cached = s.idempotency[idem_key]
                if cached:
                    return cached
                # restored-from-disk key: the update already happened
                return _summary(s)
            if s.state != AWAITING_CHOICE:
                raise HTTPException(409, f"session is {s.state}, not awaiting choice")
            if not (1 <= req.chosen <= s.session.k):
                raise HTTPException(
                    422, f"chosen index must be in [1, {s.session.k}]"
                )
            selection = s.pending
            x = s.pending_context
            t = s.session.state.t
            update = s.session.observe(x, selection, req.chosen)
            eta_used = s.session.state.history[-1].eta
            row = TraceRow(
                t=t,
                gamma=selection.gamma,
                eta=eta_used,
                delta_norm=float(np.linalg.norm(update.delta)),
                chosen_index=req.chosen,
                query_features=np.asarray(selection.features).tolist(),
                diagnostics={
                    "delta_value": selection.delta_value,
                    "mu_value": selection.mu_value,
                    "solver_status": selection.status,
                    "context": x.label,
                },
            )
            s.rows.append(row)
            s.pending = None
            s.pending_context = EMPTY_CONTEXT
            if s.T is not None and s.session.state.t > s.T:
                s.state = FINISHED
            else:
                s.state = AWAITING_CONTEXT
            self._append(
                s,
                {"type": "row", "row": json.loads(row.to_json()), "idempotency_key": idem_key},
            )
            response = _summary(s)
            if idem_key:
                s.idempotency[idem_key] = response
            return response

    def trace(self, sid: str) -> dict:
        s = self.get(sid)
        with s.lock:
            etas = [r.eta for r in s.rows]
            deltas = [
                compute_delta(np.asarray(r.query_features), r.chosen_index).delta
                for r in s.rows
            ]
            replay = replay_weights(etas, deltas, s.spec.d)
            return {
                "id": s.id,
                "rows": [json.loads(r.to_json()) for r in s.rows],
                "weights": s.session.state.w.tolist(),
                "replay": replay.tolist(),
            }


def create_app(
    domains: dict[str, DomainSpec] | None = None,
    data_dir: str | Path | None = None,
    config: SolverConfig | None = None,
) -> FastAPI:
    """Build the service; env fallbacks CFORGE_DATA_DIR / CFORGE_BACKEND /
    CFORGE_TIMEOUT_S apply when arguments are omitted."""
    if data_dir is None:
        data_dir = os.environ.get("CFORGE_DATA_DIR")
    if config is None:
        config = SolverConfig(
            backend=os.environ.get("CFORGE_BACKEND", "exhaustive"),
            timeout_s=float(os.environ.get("CFORGE_TIMEOUT_S", DEFAULT_TIMEOUT_S)),
        )
    store = SessionStore(domains, data_dir, config)
    app = FastAPI(title="cforge session service")
    app.state.store = store

    @app.get("/domains")
    def domains_endpoint() -> list[dict]:
        return [_domain_payload(did, spec) for did, spec in store.domains.items()]

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest) -> dict:
        return _summary(store.create(req))

    @app.get("/sessions/{sid}")
    def get_session(sid: str) -> dict:
        s = store.get(sid)
        with s.lock:
            return _summary(s)

    @app.post("/sessions/{sid}/query")
    def post_query(sid: str, req: QueryRequest | None = None) -> dict:
        return store.query(sid, req or QueryRequest())

    @app.post("/sessions/{sid}/choice")
    def post_choice(
        sid: str,
        req: ChoiceRequest,
        idempotency_key: str | None = Header(default=None, alias="Idempotency-Key"),
    ) -> dict:
        return store.choice(sid, req, idempotency_key)

    @app.get("/sessions/{sid}/trace")
    def get_trace(sid: str) -> dict:
        return store.trace(sid)

    return app
