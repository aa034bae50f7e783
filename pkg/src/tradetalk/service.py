"""HTTP facade: dialogue sessions, portfolio, and trade log as REST.

One venue and one portfolio per service instance.  Requests for distinct
sessions run in parallel; requests for one session are serialized, and the
venue is serialized across sessions.  Session state is committed only after
a full round-trip, so a provider failure leaves the session untouched.
"""

from __future__ import annotations

import os
import threading
import uuid
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .dialogue import (
    AwaitClarification,
    AwaitInput,
    ConfirmExecute,
    Drafting,
    Executed,
    Failed,
    IllegalEvent,
    OutboundMessage,
    ProviderReply,
    ReadyToExecute,
    Rejected,
    SessionConfig,
    SessionState,
    UserMessage,
    render_question,
    step,
)
from .exchange import OversellRejected, PriceFeed, Venue
from .extract import ExtractionPolicy
from .gateway import (
    ChatTurn,
    GatewayError,
    ProviderConfig,
    Role,
    complete,
    default_directory,
    load_provider_config,
    render_system_prompt,
)
from .orders import SymbolDirectory, draft_to_wire, order_to_wire


@dataclass(frozen=True)
class ServiceSettings:
    host: str = "127.0.0.1"
    port: int = 8420
    provider_config_path: str = ""
    feed_path: str = ""
    symbols_path: str = ""
    session_cap: int = 64
    max_turns: int = 5

    @classmethod
    def load(cls, config_path: str | Path | None = None) -> "ServiceSettings":
        """Key=value config file, then TRADETALK_* environment overrides."""
        values: dict[str, str] = {}
        if config_path:
            for lineno, raw in enumerate(
                Path(config_path).read_text(encoding="utf-8").splitlines(), 1
            ):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{config_path}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip().strip('"')
        for key in ("host", "port", "provider_config_path", "feed_path", "symbols_path",
                    "session_cap", "max_turns"):
            env = os.environ.get(f"TRADETALK_{key.upper()}")
            if env is not None:
                values[key] = env
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown settings: {', '.join(sorted(unknown))}")
        kwargs: dict = {k: v for k, v in values.items()}
        for int_key in ("port", "session_cap", "max_turns"):
            if int_key in kwargs:
                kwargs[int_key] = int(kwargs[int_key])
        return cls(**kwargs)


class _SessionHandle:
    def __init__(self, session_id: str, state: SessionState):
        self.id = session_id
        self.state = state
        self.lock = threading.Lock()
        self.last_messages: list[OutboundMessage] = []


def _default_feed() -> PriceFeed:
    with resources.as_file(resources.files("tradetalk.data").joinpath("demo_feed.csv")) as p:
        return PriceFeed.from_csv(p)


def _state_view(handle: _SessionHandle) -> dict:
    state = handle.state
    view: dict = {
        "session_id": handle.id,
        "state": _state_name(state),
        "draft": None,
        "pending_field": None,
        "pending_question": None,
        "turns_used": None,
        "report": None,
        "reason": None,
        "messages": [
            {"kind": m.kind.value, "text": m.text, "field": m.field.value if m.field else None}
            for m in handle.last_messages
        ],
    }
    if isinstance(state, AwaitClarification):
        view["draft"] = draft_to_wire(state.draft)
        view["pending_field"] = state.pending[0].value
        view["pending_question"] = render_question(state.pending[0])
        view["turns_used"] = state.turns_used
    elif isinstance(state, ReadyToExecute):
        view["draft"] = order_to_wire(state.order)
    elif isinstance(state, Executed):
        view["draft"] = order_to_wire(state.report.order)
        view["report"] = state.report.to_wire()
    elif isinstance(state, Rejected):
        view["reason"] = state.intent.value
    elif isinstance(state, Failed):
        view["reason"] = state.reason
    return view


def _state_name(state: SessionState) -> str:
    names = {
        AwaitInput: "await_input",
        Drafting: "drafting",
        AwaitClarification: "await_clarification",
        ReadyToExecute: "ready_to_execute",
        Executed: "executed",
        Rejected: "rejected",
        Failed: "failed",
    }
    return names[type(state)]


class MessageBody(BaseModel):
    text: str


def create_app(settings: ServiceSettings | None = None) -> FastAPI:
    settings = settings or ServiceSettings()
    provider_cfg = (
        load_provider_config(settings.provider_config_path)
        if settings.provider_config_path
        else ProviderConfig()
    )
    directory: SymbolDirectory = default_directory(
        settings.symbols_path or provider_cfg.symbols_path or None
    )
    feed = PriceFeed.from_csv(settings.feed_path) if settings.feed_path else _default_feed()
    venue = Venue(feed)
    venue_lock = threading.Lock()
    session_config = SessionConfig(
        max_turns=settings.max_turns, policy=ExtractionPolicy.LENIENT
    )

    sessions: dict[str, _SessionHandle] = {}
    sessions_lock = threading.Lock()

    app = FastAPI(title="tradetalk", version="0.1.0")
    # the console is plain static assets and may live on any origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _get_handle(session_id: str) -> _SessionHandle:
        with sessions_lock:
            handle = sessions.get(session_id)
        if handle is None:
            raise HTTPException(status_code=404, detail="unknown session id")
        return handle

    @app.post("/sessions", status_code=201)
    def create_session() -> dict:
        with sessions_lock:
            if len(sessions) >= settings.session_cap:
                raise HTTPException(status_code=503, detail="session cap reached")
            session_id = uuid.uuid4().hex
            sessions[session_id] = _SessionHandle(session_id, AwaitInput())
            handle = sessions[session_id]
        return _state_view(handle)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return _state_view(_get_handle(session_id))

    @app.post("/sessions/{session_id}/message")
    def post_message(session_id: str, body: MessageBody) -> dict:
        handle = _get_handle(session_id)
        with handle.lock:
            if isinstance(handle.state, (Executed, Rejected, Failed)):
                raise HTTPException(status_code=409, detail="session is terminal")
            try:
                state, messages = step(
                    handle.state, UserMessage(body.text), session_config, directory
                )
                if isinstance(state, Drafting):
                    transcript = [
                        ChatTurn(Role.SYSTEM, render_system_prompt(directory)),
                        ChatTurn(Role.USER, state.utterance),
                    ]
                    try:
                        reply = complete(transcript, provider_cfg)
                    except GatewayError as exc:
                        # session stays in its prior state
                        raise HTTPException(status_code=502, detail=str(exc)) from exc
                    state, messages = step(state, ProviderReply(reply), session_config, directory)
            except IllegalEvent as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            handle.state = state
            handle.last_messages = messages
            return _state_view(handle)

    @app.post("/sessions/{session_id}/execute")
    def execute(session_id: str) -> dict:
        handle = _get_handle(session_id)
        with handle.lock:
            if not isinstance(handle.state, ReadyToExecute):
                raise HTTPException(status_code=409, detail="session is not ready to execute")
            with venue_lock:
                try:
                    state, messages = step(
                        handle.state,
                        ConfirmExecute(),
                        session_config,
                        directory,
                        executor=venue.execute,
                    )
                except OversellRejected as exc:
                    raise HTTPException(status_code=422, detail=str(exc)) from exc
            handle.state = state
            handle.last_messages = messages
            return _state_view(handle)

    @app.get("/portfolio")
    def portfolio() -> dict:
        with venue_lock:
            return {"positions": dict(venue.portfolio.positions)}

    @app.get("/trades")
    def trades() -> dict:
        with venue_lock:
            return {"trades": [r.to_wire() for r in venue.portfolio.trade_log]}

    return app
