"""Local HTTP session service: exposes the diagnosis loop to the browser
console and to scripted clients.

Single-process, in-memory session store. Simulated sessions auto-answer
their own oracle requests one checkpoint per advance; interactive sessions
pause at awaiting_probe / awaiting_action_result until the matching result
is posted. Per-session locks serialize operations; distinct sessions are
independent.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from .device_simulator import DeviceSim, inject_fault, parse_fault_spec, \
    simulator_oracle
from .knowledge_base import KbError, KnowledgeBase, parse_kb
from .orchestrator import create_session, diagnosis_steps
from .session import DiagnosisSession, EngineConfig, OracleRequest


class CreateSessionBody(BaseModel):
    kb: Union[dict, str] = Field(description="inline KB document or file path")
    mode: str = Field(pattern="^(simulated|interactive)$")
    fault: Optional[str] = None
    inputs: Union[list[int], dict[str, int]]
    observed: Optional[dict[str, int]] = None
    config: Optional[dict] = None
    seed: int = 0


class SessionCreated(BaseModel):
    session_id: str


class ProbeResultBody(BaseModel):
    testpoint: str
    ok: bool


class ActionResultBody(BaseModel):
    device_ok: bool


class SessionView(BaseModel):
    session_id: str
    mode: str
    phase: str
    context_tree: dict
    recommendation: Optional[dict]
    ledger: dict
    transcript: list[dict]
    meta_estimates: Optional[dict]


@dataclass
class _Record:
    session: DiagnosisSession
    mode: str
    oracle: Any = None
    generator: Any = None
    pending: OracleRequest | None = None
    answer: bool | None = None
    phase: str = "running"
    lock: threading.Lock = field(default_factory=threading.Lock)


def _phase_for(request: OracleRequest) -> str:
    return "awaiting_probe" if request.kind == "probe" else "awaiting_action_result"


def _context_tree(session: DiagnosisSession) -> dict:
    kb = session.kb
    in_context = set(session.context.elements) if session.context is not None else set()

    def node_view(nid: str) -> dict:
        node = kb.nodes[nid]
        return {
            "id": nid,
            "kind": node.kind,
            "in_context": nid in in_context,
            "pruned": nid in session.pruned,
            "eliminated": (node.kind == "component" and nid in session.eliminated),
            "replacement_cost": node.replacement_cost,
            "inspection_cost": node.inspection_cost,
            "children": [node_view(c) for c in node.children],
        }

    return node_view(kb.root)


def _recommendation(rec: _Record) -> dict | None:
    req = rec.pending
    if req is None:
        return None
    p = dict(req.payload)
    if req.kind == "probe":
        return {"action": "probe", "testpoint": p["testpoint"], "cost": p["cost"]}
    return {"action": p["action"], "target": p.get("target"), "cost": p["cost"]}


def _view(session_id: str, rec: _Record) -> SessionView:
    s = rec.session
    return SessionView(
        session_id=session_id,
        mode=rec.mode,
        phase=rec.phase,
        context_tree=_context_tree(s),
        recommendation=_recommendation(rec),
        ledger=s.ledger.to_dict(),
        transcript=[e.to_dict() for e in s.transcript],
        meta_estimates=s.last_estimates,
    )


def _load_kb_payload(payload: Union[dict, str]) -> KnowledgeBase:
    try:
        if isinstance(payload, str):
            path = Path(payload)
            if not path.exists():
                raise HTTPException(422, f"kb path not found: {payload}")
            return parse_kb(path.read_bytes())
        return parse_kb(json.dumps(payload))
    except KbError as e:
        raise HTTPException(422, f"invalid kb: {e}") from e


def create_app() -> FastAPI:
    app = FastAPI(title="hierdx session service", version="0.1.0")
    store: dict[str, _Record] = {}

    def get_record(session_id: str) -> _Record:
        rec = store.get(session_id)
        if rec is None:
            raise HTTPException(404, "unknown session")
        return rec

    @app.post("/api/sessions", response_model=SessionCreated, status_code=201)
    def create(body: CreateSessionBody):
        kb = _load_kb_payload(body.kb)
        if isinstance(body.inputs, list):
            if len(body.inputs) != len(kb.inputs):
                raise HTTPException(422, f"inputs must list {len(kb.inputs)} bits")
            inputs = dict(zip(kb.inputs, body.inputs))
        else:
            inputs = dict(body.inputs)
        config = EngineConfig(**(body.config or {}))

        if body.mode == "simulated":
            try:
                fault = parse_fault_spec(body.fault) if body.fault else None
                sim = inject_fault(kb, fault, seed=body.seed)
            except (ValueError, KbError) as e:
                raise HTTPException(422, str(e)) from e
            sim.current_inputs = dict(inputs)
            values = sim.evaluate(inputs)
            observations = {**inputs, **{o: values[o] for o in kb.outputs}}
            oracle = simulator_oracle(sim)
        else:
            if body.observed is None:
                raise HTTPException(422, "interactive mode requires observed outputs")
            observations = {**inputs, **body.observed}
            oracle = None

        try:
            session = create_session(kb, observations, config, oracle)
        except KbError as e:
            raise HTTPException(422, str(e)) from e
        session_id = uuid.uuid4().hex[:12]
        store[session_id] = _Record(session=session, mode=body.mode, oracle=oracle)
        return SessionCreated(session_id=session_id)

    @app.get("/api/sessions/{session_id}", response_model=SessionView)
    def view(session_id: str):
        rec = get_record(session_id)
        with rec.lock:
            return _view(session_id, rec)

    @app.post("/api/sessions/{session_id}/advance", response_model=SessionView)
    def advance(session_id: str):
        rec = get_record(session_id)
        with rec.lock:
            if rec.phase == "done":
                raise HTTPException(409, "session is done")
            if rec.mode == "interactive" and rec.pending is not None \
                    and rec.answer is None:
                raise HTTPException(409, f"session is {rec.phase}")
            try:
                if rec.generator is None:
                    rec.generator = diagnosis_steps(rec.session)
                    request = next(rec.generator)
                else:
                    if rec.mode == "simulated":
                        answer = rec.oracle(rec.pending)
                    else:
                        answer = rec.answer
                        rec.answer = None
                    request = rec.generator.send(answer)
                rec.pending = request
                rec.phase = ("running" if rec.mode == "simulated"
                             else _phase_for(request))
            except StopIteration:
                rec.pending = None
                rec.phase = "done"
            return _view(session_id, rec)

    @app.post("/api/sessions/{session_id}/probe-result", response_model=SessionView)
    def probe_result(session_id: str, body: ProbeResultBody):
        rec = get_record(session_id)
        with rec.lock:
            if rec.mode != "interactive" or rec.phase != "awaiting_probe":
                raise HTTPException(409, f"session is {rec.phase}")
            if body.testpoint != rec.pending.payload["testpoint"]:
                raise HTTPException(
                    409, f"pending probe is {rec.pending.payload['testpoint']}")
            rec.answer = body.ok
            rec.phase = "running"
            return _view(session_id, rec)

    @app.post("/api/sessions/{session_id}/action-result", response_model=SessionView)
    def action_result(session_id: str, body: ActionResultBody):
        rec = get_record(session_id)
        with rec.lock:
            if rec.mode != "interactive" or rec.phase != "awaiting_action_result":
                raise HTTPException(409, f"session is {rec.phase}")
            rec.answer = body.device_ok
            rec.phase = "running"
            return _view(session_id, rec)

    @app.delete("/api/sessions/{session_id}", status_code=204)
    def delete(session_id: str):
        get_record(session_id)
        del store[session_id]
        return Response(status_code=204)

    return app


app = create_app()
