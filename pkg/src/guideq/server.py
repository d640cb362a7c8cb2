"""HTTP+JSON service over the session orchestrator.

One service instance owns an item bank and a session store. Turns within a
session are strictly serialized: a second concurrent turn request gets a
409 busy answer instead of queueing. All error bodies are {code, message}.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .corpus import ItemBank
from .errors import (
    ConflictError,
    GatewayError,
    GuideqError,
    LlmParseError,
    SessionTerminatedError,
)
from .gateway import GatewayConfig
from .guidance import GuidanceConfig
from .irt import OptimizerConfig
from .session import (
    Session,
    answer_item,
    create_session,
    run_turn,
    session_to_dict,
    utc_now_iso,
)


class CreateSessionBody(BaseModel):
    initial_theta: list[float] | None = None


class TurnBody(BaseModel):
    query: str


class AnswerBody(BaseModel):
    item_id: str
    selected_index: int


@dataclass
class SessionHandle:
    session: Session
    gateway: object
    lock: threading.Lock = field(default_factory=threading.Lock)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def turn_result_to_dict(result) -> dict:
    return {
        "response": result.response,
        "touched_concepts": result.touched_concepts,
        "theta_after": result.theta_after.tolist(),
        "guiding_questions": [
            {
                "text": q.text, "target_concept": q.target_concept, "align": q.align,
                "mi": q.mi, "complexity": q.complexity, "quality": q.quality,
                "mode": q.mode.value,
            }
            for q in result.guiding_questions
        ],
        "branch": result.branch.value,
        "inspiring_texts": [
            {
                "fragment": t.fragment, "concept_id": t.concept_id,
                "difficulty": t.difficulty, "suitability": t.suitability,
            }
            for t in result.inspiring_texts
        ],
        "warnings": result.warnings,
    }


def build_app(
    bank: ItemBank,
    gateway_factory,
    guidance: GuidanceConfig | None = None,
    optimizer: OptimizerConfig | None = None,
    gateway_cfg: GatewayConfig | None = None,
    seed: int | None = None,
    clock=utc_now_iso,
) -> FastAPI:
    """Assemble the service. gateway_factory() makes one gateway per session."""
    app = FastAPI(title="guideq", version="0.1.0")
    store: dict[str, SessionHandle] = {}
    store_lock = threading.Lock()
    counter = {"n": 0}

    def _handle(session_id: str) -> SessionHandle | None:
        with store_lock:
            return store.get(session_id)

    @app.exception_handler(GuideqError)
    async def _domain_error(_request: Request, exc: GuideqError):
        if isinstance(exc, (GatewayError,)):
            return _error(502, "gateway_error", str(exc))
        if isinstance(exc, SessionTerminatedError):
            return _error(409, "terminated", str(exc))
        if isinstance(exc, LlmParseError):
            return _error(502, "parse_error", str(exc))
        if isinstance(exc, ConflictError):
            return _error(404, "not_found", str(exc))
        return _error(400, "invalid_request", str(exc))

    @app.post("/sessions", status_code=201)
    def create(body: CreateSessionBody | None = None):
        with store_lock:
            counter["n"] += 1
            n = counter["n"]
        rng = np.random.default_rng([seed, n]) if seed is not None else None
        initial = body.initial_theta if body is not None else None
        session = create_session(
            bank,
            initial_theta=initial,
            guidance=guidance,
            optimizer=optimizer,
            gateway_cfg=gateway_cfg,
            rng=rng,
            clock=clock,
        )
        handle = SessionHandle(session=session, gateway=gateway_factory())
        with store_lock:
            store[session.session_id] = handle
        return {"session_id": session.session_id, "theta": session.theta.tolist()}

    @app.post("/sessions/{session_id}/turns")
    def turn(session_id: str, body: TurnBody):
        handle = _handle(session_id)
        if handle is None:
            return _error(404, "not_found", f"no session {session_id!r}")
        if not handle.lock.acquire(blocking=False):
            return _error(409, "busy", "a turn is already running for this session")
        try:
            result = run_turn(handle.session, body.query, bank, handle.gateway, clock)
        finally:
            handle.lock.release()
        if result is None:
            return {"session_id": session_id, "terminated": True}
        return turn_result_to_dict(result)

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str):
        handle = _handle(session_id)
        if handle is None:
            return _error(404, "not_found", f"no session {session_id!r}")
        s = handle.session
        return {
            "session_id": session_id,
            "concepts": s.concept_set.names,
            "concept_ids": s.concept_set.ids,
            "theta": s.theta.tolist(),
            "epsilon_low": s.guidance.epsilon_low,
            "terminated": s.terminated,
            "rounds": s.next_round,
        }

    @app.get("/sessions/{session_id}/transcript")
    def transcript(session_id: str):
        handle = _handle(session_id)
        if handle is None:
            return _error(404, "not_found", f"no session {session_id!r}")
        data = session_to_dict(handle.session)
        return {
            "session_id": session_id,
            "turns": data["turns"],
            "llm_calls": data["llm_calls"],
        }

    @app.post("/sessions/{session_id}/answers")
    def answer(session_id: str, body: AnswerBody):
        handle = _handle(session_id)
        if handle is None:
            return _error(404, "not_found", f"no session {session_id!r}")
        with handle.lock:
            return answer_item(handle.session, bank, body.item_id, body.selected_index, clock)

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete(session_id: str):
        with store_lock:
            if session_id not in store:
                return _error(404, "not_found", f"no session {session_id!r}")
            del store[session_id]
        return Response(status_code=204)

    return app


def serve_api(bank: ItemBank, gateway_factory, bind: str = "127.0.0.1:8000",
              guidance: GuidanceConfig | None = None,
              optimizer: OptimizerConfig | None = None,
              gateway_cfg: GatewayConfig | None = None,
              seed: int | None = None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    host, _, port = bind.partition(":")
    app = build_app(bank, gateway_factory, guidance, optimizer, gateway_cfg, seed)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or "8000"), log_level="info")
