"""FastAPI service exposing the matcher over HTTP and WebSocket.

Wire protocol (JSON): envelopes {type, session, payload}. Clients send
"create", "utterance", and "rate"; the server answers with "reply" (a
clarification or acknowledgment) or "select" (the matcher's final choice).
The HTTP endpoints mirror the same payloads for clients without sockets.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field, ValidationError

from . import default_grammar_path, default_lexicon_path
from .colors import load_lexicon
from .grammar import Pcfg, load_grammar
from .policy import QFunction
from .session import Session, SessionError, TrialRecord, session_step
from .simulator import sample_context

DATA_DIR_ENV = "COLORREF_DATA_DIR"


class PatchModel(BaseModel):
    hue: float
    sat: float = Field(ge=0, le=1)
    light: float = Field(ge=0, le=1)


class CreatePayload(BaseModel):
    policy: str | None = None  # "baseline" or "model"; None uses the server default


class SessionCreated(BaseModel):
    session: str
    patches: list[PatchModel]


class UtterancePayload(BaseModel):
    text: str = Field(max_length=500)


class ReplyPayload(BaseModel):
    kind: str  # clarify | select | none | timeout
    text: str | None = None
    index: int | None = None
    correct: bool | None = None


class RatePayload(BaseModel):
    rating: int = Field(ge=0, le=5)
    feedback: str = ""


class Envelope(BaseModel):
    type: str  # create | utterance | reply | select | rate
    session: str | None = None
    payload: dict = Field(default_factory=dict)


class MatcherService:
    """Owns shared immutable artifacts and the per-session state."""

    def __init__(
        self,
        lexicon,
        pcfg: Pcfg,
        model: QFunction | None = None,
        default_policy: str = "baseline",
        seed: int = 0,
        data_dir: str | None = None,
        context_mode: str = "random",
        alpha: float = 1.0,
    ):
        self.lexicon = lexicon
        self.pcfg = pcfg
        self.model = model
        self.default_policy = default_policy
        self.context_mode = context_mode
        self.alpha = alpha
        self.rng = np.random.default_rng(seed)
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self.data_dir = Path(
            data_dir or os.environ.get(DATA_DIR_ENV, "colorref_data")
        )

    def _resolve_policy(self, name: str | None):
        name = name or self.default_policy
        if name == "baseline":
            return "baseline"
        if name == "model":
            if self.model is None:
                raise HTTPException(400, "no model loaded on this server")
            return self.model
        raise HTTPException(400, f"unknown policy {name!r}")

    def create_session(self, policy: str | None = None) -> Session:
        with self.lock:
            ctx = sample_context(self.rng, self.context_mode)
            session = Session(context=ctx, policy=self._resolve_policy(policy))
            self.sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(404, "unknown session")
        return session

    def step(self, session_id: str, text: str) -> dict:
        session = self.get(session_id)
        try:
            return session_step(session, text, self.lexicon, self.pcfg, alpha=self.alpha)
        except SessionError as exc:
            raise HTTPException(409, str(exc)) from exc

    def rate(self, session_id: str, rating: int, feedback: str) -> None:
        session = self.get(session_id)
        record = TrialRecord(
            session_id=session.id,
            context=session.context,
            transcript=session.transcript,
            outcome=session.status,
            rating=rating,
            feedback=feedback,
        )
        self.data_dir.mkdir(parents=True, exist_ok=True)
        with self.lock:
            with open(self.data_dir / "trials.jsonl", "a", encoding="utf-8") as fh:
                fh.write(record.to_json() + "\n")


def _session_created(session: Session) -> SessionCreated:
    return SessionCreated(
        session=session.id,
        patches=[
            PatchModel(hue=p.hue, sat=p.saturation, light=p.lightness)
            for p in session.context.patches
        ],
    )


def _reply_payload(reply: dict) -> ReplyPayload:
    return ReplyPayload(
        kind=reply["type"],
        text=reply.get("text"),
        index=reply.get("index"),
        correct=reply.get("correct"),
    )


def create_app(
    lexicon_path: str | None = None,
    grammar_path: str | None = None,
    weights_path: str | None = None,
    model_path: str | None = None,
    seed: int = 0,
    data_dir: str | None = None,
    context_mode: str = "random",
    alpha: float = 1.0,
) -> FastAPI:
    lexicon = load_lexicon(lexicon_path or default_lexicon_path())
    grammar = load_grammar(grammar_path or default_grammar_path(), lexicon)
    if weights_path:
        pcfg = Pcfg.load_weights(weights_path, grammar)
    else:
        pcfg = Pcfg.uniform(grammar)
    model = QFunction.load(model_path) if model_path else None
    service = MatcherService(
        lexicon,
        pcfg,
        model=model,
        default_policy="model" if model else "baseline",
        seed=seed,
        data_dir=data_dir,
        context_mode=context_mode,
        alpha=alpha,
    )

    app = FastAPI(title="colorref matcher")
    app.state.service = service

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/session", response_model=SessionCreated)
    def create_session(payload: CreatePayload | None = None):
        policy = payload.policy if payload else None
        return _session_created(service.create_session(policy))

    @app.get("/session/{session_id}")
    def session_state(session_id: str):
        session = service.get(session_id)
        return {
            "session": session.id,
            "status": session.status,
            "turn": session.turn,
            "transcript": session.transcript,
        }

    @app.post("/session/{session_id}/utterance", response_model=ReplyPayload)
    def utterance(session_id: str, payload: UtterancePayload):
        return _reply_payload(service.step(session_id, payload.text))

    @app.post("/session/{session_id}/rate")
    def rate(session_id: str, payload: RatePayload):
        service.rate(session_id, payload.rating, payload.feedback)
        return {"status": "recorded"}

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                raw = await ws.receive_json()
                try:
                    envelope = Envelope.model_validate(raw)
                except ValidationError as exc:
                    await ws.send_json({"type": "error", "payload": {"detail": str(exc)}})
                    continue
                try:
                    await _handle_ws_message(ws, service, envelope)
                except HTTPException as exc:
                    await ws.send_json(
                        {
                            "type": "error",
                            "session": envelope.session,
                            "payload": {"detail": exc.detail},
                        }
                    )
        except WebSocketDisconnect:
            pass

    return app


async def _handle_ws_message(ws, service: MatcherService, envelope: Envelope):
    if envelope.type == "create":
        payload = CreatePayload.model_validate(envelope.payload)
        session = service.create_session(payload.policy)
        created = _session_created(session)
        await ws.send_json(
            {
                "type": "reply",
                "session": session.id,
                "payload": created.model_dump(),
            }
        )
    elif envelope.type == "utterance":
        if not envelope.session:
            raise HTTPException(400, "utterance requires a session id")
        payload = UtterancePayload.model_validate(envelope.payload)
        reply = service.step(envelope.session, payload.text)
        kind = "select" if reply["type"] == "select" else "reply"
        await ws.send_json(
            {
                "type": kind,
                "session": envelope.session,
                "payload": _reply_payload(reply).model_dump(),
            }
        )
    elif envelope.type == "rate":
        if not envelope.session:
            raise HTTPException(400, "rating requires a session id")
        payload = RatePayload.model_validate(envelope.payload)
        service.rate(envelope.session, payload.rating, payload.feedback)
        await ws.send_json(
            {
                "type": "reply",
                "session": envelope.session,
                "payload": {"kind": "rated"},
            }
        )
    else:
        raise HTTPException(400, f"unsupported message type {envelope.type!r}")
