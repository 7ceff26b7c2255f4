"""HTTP front door: session management, SSE chat streaming, ingestion, health."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .agent import AgentEvent, ToolContext, run_agent
from .config import AppConfig
from .gateway import Gateway, GatewayEmbedder
from .index import HashEmbedder, VectorIndex, build_index_from_manifest
from .model import Message, Role, append_message
from .rag import rephrase_question
from .sessions import SessionBusy, SessionNotFound, SessionStore
from .tools import build_default_registry

log = logging.getLogger(__name__)


def sse_frame(kind: str, data: dict) -> bytes:
    payload = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return f"event: {kind}\ndata: {payload}\n\n".encode("utf-8")


@dataclass
class Runtime:
    """Everything the routes share, wired once at startup."""

    config: AppConfig
    gateway: Gateway
    embedder: object
    index: VectorIndex
    store: SessionStore

    @property
    def registry(self):
        return build_default_registry(self.index, self.embedder, k=self.config.retrieval_k)

    @property
    def tool_context_defaults(self) -> dict:
        return {"gateway": self.gateway, "prompts_dir": self.config.prompts_dir}


def build_runtime(config: AppConfig) -> Runtime:
    gateway = Gateway(config.provider)
    embedder = GatewayEmbedder(gateway) if config.embedder == "gateway" else HashEmbedder()
    index_path = Path(config.index_path)
    if index_path.exists():
        index = VectorIndex.load(index_path)
    else:
        index = VectorIndex(
            dimension=getattr(embedder, "dimension", None), embedder_tag=embedder.tag
        )
    store = SessionStore(config.sessions_dir)
    return Runtime(config=config, gateway=gateway, embedder=embedder, index=index, store=store)


class CreateSessionBody(BaseModel):
    language_hint: str | None = None


class MessageBody(BaseModel):
    content: str
    language_hint: str | None = None


class IngestBody(BaseModel):
    manifest: str


def create_app(config: AppConfig, runtime: Runtime | None = None) -> FastAPI:
    rt = runtime or build_runtime(config)
    app = FastAPI(title="mentor service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.runtime = rt

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody | None = None):
        hint = body.language_hint if body else None
        session = rt.store.create(language_hint=hint)
        return {"session_id": session.id}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            return rt.store.get(session_id).to_dict()
        except SessionNotFound as err:
            raise HTTPException(status_code=404, detail=str(err)) from err

    @app.post("/api/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        try:
            session = rt.store.get(session_id)
        except SessionNotFound as err:
            raise HTTPException(status_code=404, detail=str(err)) from err
        if body.language_hint:
            session.language_hint = body.language_hint
        try:
            rt.store.acquire(session_id)
        except SessionBusy as err:
            raise HTTPException(status_code=409, detail=str(err)) from err

        events: list[AgentEvent] = []
        failure: Exception | None = None
        try:
            question = body.content
            if any(m.role in (Role.STUDENT, Role.ASSISTANT) for m in session.messages):
                question = rephrase_question(
                    question, session, rt.gateway, max_turns=rt.config.history_window
                )
            context = ToolContext(
                gateway=rt.gateway,
                prompts_dir=rt.config.prompts_dir,
                language_hint=session.language_hint,
            )
            result = run_agent(
                session,
                question,
                rt.registry,
                rt.config.agent,
                rt.gateway,
                events.append,
                context=context,
                history_window=rt.config.history_window,
            )
            append_message(session, Message(role=Role.STUDENT, content=body.content))
            append_message(session, Message(role=Role.ASSISTANT, content=result.answer))
            rt.store.save(session)
        except Exception as err:  # noqa: BLE001 - surfaced to the client as an error event
            failure = err
            log.exception("agent run failed for session %s", session_id)
            try:
                append_message(session, Message(role=Role.STUDENT, content=body.content))
                rt.store.save(session)
            except Exception:  # noqa: BLE001
                log.exception("could not persist failed turn")
        finally:
            rt.store.release(session_id)

        def stream() -> Iterator[bytes]:
            for event in events:
                yield sse_frame(event.kind, event.to_dict())
            if failure is not None:
                seq = len(events)
                yield sse_frame(
                    "error",
                    {"kind": "error", "seq": seq, "payload": {"message": str(failure)}},
                )
            yield sse_frame("done", {})

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.post("/api/ingest")
    def ingest(body: IngestBody):
        manifest = Path(body.manifest)
        if not manifest.exists():
            raise HTTPException(status_code=404, detail=f"no manifest at {body.manifest}")
        _, result = build_index_from_manifest(
            manifest,
            rt.embedder,
            size=rt.config.chunk_size,
            overlap=rt.config.chunk_overlap,
            index=rt.index,
        )
        rt.index.save(rt.config.index_path)
        payload = {
            "documents": result.document_count,
            "chunks": result.chunk_count,
            "errors": result.errors,
        }
        status = 207 if result.errors else 200
        return JSONResponse(payload, status_code=status)

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "index_size": rt.index.size(),
            "transport": rt.config.provider.transport,
        }

    static_dir = config.static_dir
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
