"""HTTP surface: sessions, SSE streaming, ingestion, health, static hosting."""
import json

import httpx
import pytest
from fastapi.testclient import TestClient

from conftest import write_corpus
from helpers import last_text, make_gateway, usecase_crypto_brain
from mentor.config import AppConfig
from mentor.gateway import Gateway, ProviderConfig
from mentor.index import HashEmbedder, VectorIndex
from mentor.service import Runtime, create_app, sse_frame
from mentor.sessions import SessionStore


def parse_sse(body: bytes) -> list[tuple[str, dict]]:
    frames = []
    for block in body.decode("utf-8").strip().split("\n\n"):
        event_line, data_line = block.splitlines()
        assert event_line.startswith("event: ")
        assert data_line.startswith("data: ")
        frames.append((event_line[len("event: "):], json.loads(data_line[len("data: "):])))
    return frames


def make_client(tmp_path, brain=usecase_crypto_brain, gateway=None, static_dir=None):
    config = AppConfig(
        provider=ProviderConfig(base_url="https://provider.test/v1", transport="live"),
        index_path=str(tmp_path / "index.jsonl"),
        sessions_dir=str(tmp_path / "sessions"),
        static_dir=static_dir,
    )
    embedder = HashEmbedder(64)
    runtime = Runtime(
        config=config,
        gateway=gateway if gateway is not None else make_gateway(brain),
        embedder=embedder,
        index=VectorIndex(dimension=64, embedder_tag=embedder.tag),
        store=SessionStore(config.sessions_dir),
    )
    return TestClient(create_app(config, runtime)), runtime


class TestSseFrame:
    def test_wire_format(self):
        frame = sse_frame("answer", {"b": 1, "a": 2})
        assert frame == b'event: answer\ndata: {"a":2,"b":1}\n\n'


class TestSessions:
    def test_create_and_fetch(self, tmp_path):
        client, _ = make_client(tmp_path)
        created = client.post("/api/sessions", json={"language_hint": "en"})
        assert created.status_code == 201
        sid = created.json()["session_id"]
        fetched = client.get(f"/api/sessions/{sid}")
        assert fetched.status_code == 200
        assert fetched.json()["id"] == sid
        assert fetched.json()["language_hint"] == "en"

    def test_create_without_body(self, tmp_path):
        client, _ = make_client(tmp_path)
        assert client.post("/api/sessions").status_code == 201

    def test_fetch_unknown_is_404(self, tmp_path):
        client, _ = make_client(tmp_path)
        assert client.get("/api/sessions/ghost").status_code == 404


class TestMessages:
    def test_unknown_session_is_404(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/sessions/ghost/messages", json={"content": "hi"})
        assert response.status_code == 404

    def test_missing_content_is_422(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = client.post("/api/sessions").json()["session_id"]
        assert client.post(f"/api/sessions/{sid}/messages", json={}).status_code == 422

    def test_full_stream_for_crypto_question(self, tmp_path):
        client, runtime = make_client(tmp_path)
        sid = client.post("/api/sessions").json()["session_id"]
        response = client.post(
            f"/api/sessions/{sid}/messages", json={"content": "Find 213^(-1) mod 323"}
        )
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/event-stream")
        frames = parse_sse(response.content)
        kinds = [kind for kind, _ in frames]
        assert kinds == ["thinking", "tool_call", "tool_result", "answer", "sources", "done"]
        seqs = [data["seq"] for kind, data in frames if kind != "done"]
        assert seqs == sorted(seqs) == list(range(len(seqs)))
        answer = next(data for kind, data in frames if kind == "answer")
        assert "138" in answer["payload"]["text"]
        assert answer["payload"]["verified"] is True

        # Both turns were persisted.
        session = runtime.store.get(sid)
        roles = [m.role.value for m in session.messages]
        assert roles == ["student", "assistant"]
        assert "138" in session.messages[1].content

    def test_busy_session_is_409(self, tmp_path):
        client, runtime = make_client(tmp_path)
        sid = client.post("/api/sessions").json()["session_id"]
        runtime.store.acquire(sid)
        try:
            response = client.post(f"/api/sessions/{sid}/messages", json={"content": "hi"})
            assert response.status_code == 409
        finally:
            runtime.store.release(sid)

    def test_lock_released_after_run(self, tmp_path):
        client, _ = make_client(tmp_path)
        sid = client.post("/api/sessions").json()["session_id"]
        body = {"content": "Find 213^(-1) mod 323"}
        assert client.post(f"/api/sessions/{sid}/messages", json=body).status_code == 200

        def followup_brain(messages):
            user = last_text(messages, "user")
            if user.startswith("Rewrite the student's latest question"):
                return "Find 213^(-1) mod 323"
            return usecase_crypto_brain(messages)

        # A second turn on the same session must not hit the 409 path.
        second = client.post(f"/api/sessions/{sid}/messages", json=body)
        assert second.status_code in (200,)  # lock was released

    def test_second_turn_is_rephrased_with_history(self, tmp_path):
        rephrase_prompts = []

        def brain(messages):
            user = last_text(messages, "user")
            if user.startswith("Rewrite the student's latest question"):
                rephrase_prompts.append(user)
                return "Find 213^(-1) mod 323"
            return usecase_crypto_brain(messages)

        client, _ = make_client(tmp_path, brain=brain)
        sid = client.post("/api/sessions").json()["session_id"]
        first = client.post(
            f"/api/sessions/{sid}/messages", json={"content": "Find 213^(-1) mod 323"}
        )
        assert first.status_code == 200
        assert rephrase_prompts == []  # no history on the first turn

        second = client.post(
            f"/api/sessions/{sid}/messages", json={"content": "what was that number again?"}
        )
        assert second.status_code == 200
        assert len(rephrase_prompts) == 1
        assert "what was that number again?" in rephrase_prompts[0]
        assert "STUDENT: Find 213^(-1) mod 323" in rephrase_prompts[0]

    def test_gateway_failure_yields_error_then_done(self, tmp_path):
        broken = Gateway(
            ProviderConfig(base_url="https://provider.test/v1", transport="live"),
            http_transport=httpx.MockTransport(lambda r: httpx.Response(500, text="down")),
            backoff_base=0.0,
        )
        client, runtime = make_client(tmp_path, gateway=broken)
        sid = client.post("/api/sessions").json()["session_id"]
        response = client.post(f"/api/sessions/{sid}/messages", json={"content": "hello"})
        assert response.status_code == 200  # failure travels inside the stream
        frames = parse_sse(response.content)
        kinds = [kind for kind, _ in frames]
        assert kinds == ["thinking", "error", "done"]
        error = frames[1][1]
        assert "server error 500" in error["payload"]["message"]
        # The student's turn is still recorded for the next attempt.
        session = runtime.store.get(sid)
        assert [m.role.value for m in session.messages] == ["student"]
        # And the lock is free again.
        runtime.store.acquire(sid)
        runtime.store.release(sid)

    def test_language_hint_update_sticks(self, tmp_path):
        client, runtime = make_client(tmp_path)
        sid = client.post("/api/sessions").json()["session_id"]
        response = client.post(
            f"/api/sessions/{sid}/messages",
            json={"content": "Find 213^(-1) mod 323", "language_hint": "en-GB"},
        )
        assert response.status_code == 200
        assert runtime.store.get(sid).language_hint == "en-GB"


class TestIngestEndpoint:
    def test_missing_manifest_is_404(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/ingest", json={"manifest": str(tmp_path / "nope.jsonl")})
        assert response.status_code == 404

    def test_ingest_populates_and_persists_index(self, tmp_path):
        client, runtime = make_client(tmp_path)
        manifest = write_corpus(tmp_path / "corpus")
        response = client.post("/api/ingest", json={"manifest": manifest})
        assert response.status_code == 200
        payload = response.json()
        assert payload["documents"] == 4
        assert payload["chunks"] >= 4
        assert payload["errors"] == []
        assert runtime.index.size() == payload["chunks"]
        assert (tmp_path / "index.jsonl").exists()

    def test_partial_failure_is_207(self, tmp_path):
        client, _ = make_client(tmp_path)
        manifest = write_corpus(tmp_path / "corpus")
        with open(manifest, "a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {
                        "path": "missing.md",
                        "category": "knowledge_units",
                        "title": "Ghost",
                        "url": "https://kb.example.edu/ghost",
                    }
                )
                + "\n"
            )
        response = client.post("/api/ingest", json={"manifest": manifest})
        assert response.status_code == 207
        payload = response.json()
        assert payload["documents"] == 4
        assert len(payload["errors"]) == 1
        assert "missing.md" in payload["errors"][0]


class TestHealthAndStatic:
    def test_health_reports_index_and_transport(self, tmp_path):
        client, _ = make_client(tmp_path)
        payload = client.get("/api/health").json()
        assert payload == {"status": "ok", "index_size": 0, "transport": "live"}

    def test_static_ui_served_when_configured(self, tmp_path):
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<h1>mentor ui</h1>", encoding="utf-8")
        client, _ = make_client(tmp_path, static_dir=str(ui))
        response = client.get("/")
        assert response.status_code == 200
        assert "mentor ui" in response.text

    def test_no_static_mount_without_config(self, tmp_path):
        client, _ = make_client(tmp_path)
        assert client.get("/").status_code == 404
