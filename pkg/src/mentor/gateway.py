"""Provider client for chat completions and embeddings.

Three transports share one code path: `live` talks to an OpenAI-compatible
REST endpoint, `record` does a live call and stores the (request hash,
response) pair as a fixture file, and `replay` serves responses from those
fixtures without touching the network. Replay plus a deterministic embedder
makes whole conversations reproducible byte for byte.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import httpx
import numpy as np

from .errors import InvalidArgument, MentorError

log = logging.getLogger(__name__)

_CHAT_ROLES = {"system", "user", "assistant"}
_TRANSPORTS = {"live", "record", "replay"}
_MAX_RETRIES = 3  # extra attempts after the first, on transient failures


class TransportError(MentorError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class RateLimited(TransportError):
    def __init__(self, retry_after: float | None = None):
        super().__init__("provider rate limit exceeded", status=429)
        self.retry_after = retry_after


class FixtureMiss(MentorError):
    def __init__(self, request_hash: str):
        super().__init__(f"no recorded response for request {request_hash}")
        self.request_hash = request_hash


class EmptyInput(MentorError):
    pass


@dataclass(frozen=True)
class GenerationParams:
    max_tokens: int = 4096
    n: int = 1
    temperature: float = 0.5
    top_p: float = 1.0
    frequency_penalty: float = 0.0
    presence_penalty: float = 0.6


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[tuple[str, str], ...]
    params: GenerationParams = GenerationParams()

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple((r, c) for r, c in self.messages))
        if not self.messages:
            raise EmptyInput("chat request needs at least one message")
        for role, content in self.messages:
            if role not in _CHAT_ROLES:
                raise InvalidArgument(f"chat role must be one of {sorted(_CHAT_ROLES)}, got {role!r}")
            if not isinstance(content, str):
                raise InvalidArgument("message content must be text")


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str = "stop"
    usage: dict | None = None


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = "https://api.openai.com/v1"
    api_key: str = ""
    model: str = "gpt-4o"
    embed_model: str = "text-embedding-3-small"
    timeout: float = 30.0
    transport: str = "live"
    fixtures_dir: str | None = None

    def __post_init__(self) -> None:
        if self.transport not in _TRANSPORTS:
            raise InvalidArgument(f"transport must be one of {sorted(_TRANSPORTS)}, got {self.transport!r}")
        if self.transport in ("record", "replay") and not self.fixtures_dir:
            raise InvalidArgument(f"{self.transport} transport requires fixtures_dir")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def request_hash(req: ChatRequest) -> str:
    """Digest over everything that can change the model's answer."""
    payload = {
        "kind": "chat",
        "model": req.model,
        "messages": [{"role": r, "content": c} for r, c in req.messages],
        "params": asdict(req.params),
    }
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def embed_request_hash(model: str, texts: list[str]) -> str:
    payload = {"kind": "embeddings", "model": model, "input": list(texts)}
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


class FixtureStore:
    """Directory of `<request_hash>.json` recordings."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, request_hash_: str) -> Path:
        return self.root / f"{request_hash_}.json"

    def load(self, request_hash_: str) -> dict:
        path = self.path(request_hash_)
        if not path.exists():
            raise FixtureMiss(request_hash_)
        return json.loads(path.read_text(encoding="utf-8"))["response"]

    def save(self, request_hash_: str, request_payload: dict, response_payload: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        doc = {
            "request_hash": request_hash_,
            "request": request_payload,
            "response": response_payload,
            "recorded_at": datetime.now(timezone.utc).isoformat(),
        }
        self.path(request_hash_).write_text(
            json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )


class Gateway:
    """Chat and embedding calls behind one retrying client."""

    def __init__(
        self,
        config: ProviderConfig,
        http_transport: httpx.BaseTransport | None = None,
        backoff_base: float = 0.5,
    ):
        self.config = config
        self.fixtures = FixtureStore(config.fixtures_dir) if config.fixtures_dir else None
        self.calls = 0  # completed chat round trips, any transport
        self._http_transport = http_transport
        self._backoff_base = backoff_base
        self._client: httpx.Client | None = None

    # -- chat ------------------------------------------------------------

    def complete(self, req: ChatRequest) -> ChatResponse:
        h = request_hash(req)
        if self.config.transport == "replay":
            data = self.fixtures.load(h)
            self.calls += 1
            return ChatResponse(
                content=data["content"],
                finish_reason=data.get("finish_reason", "stop"),
                usage=data.get("usage"),
            )
        body = {
            "model": req.model,
            "messages": [{"role": r, "content": c} for r, c in req.messages],
            **asdict(req.params),
        }
        data = self._post_with_retries("/chat/completions", body)
        try:
            choice = data["choices"][0]
            response = ChatResponse(
                content=choice["message"]["content"],
                finish_reason=choice.get("finish_reason", "stop"),
                usage=data.get("usage"),
            )
        except (KeyError, IndexError, TypeError) as err:
            raise TransportError(f"malformed completion payload: {err}") from err
        if self.config.transport == "record":
            self.fixtures.save(
                h,
                request_payload=body,
                response_payload={
                    "content": response.content,
                    "finish_reason": response.finish_reason,
                    "usage": response.usage,
                },
            )
        self.calls += 1
        return response

    # -- embeddings --------------------------------------------------------

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            return []
        for text in texts:
            if not isinstance(text, str) or not text.strip():
                raise EmptyInput("cannot embed empty text")
        h = embed_request_hash(self.config.embed_model, texts)
        if self.config.transport == "replay":
            data = self.fixtures.load(h)
            return [np.asarray(v, dtype=np.float32) for v in data["vectors"]]
        body = {"model": self.config.embed_model, "input": list(texts)}
        data = self._post_with_retries("/embeddings", body)
        try:
            rows = sorted(data["data"], key=lambda row: row["index"])
            vectors = [row["embedding"] for row in rows]
        except (KeyError, TypeError) as err:
            raise TransportError(f"malformed embeddings payload: {err}") from err
        if len(vectors) != len(texts):
            raise TransportError(f"expected {len(texts)} embeddings, got {len(vectors)}")
        if self.config.transport == "record":
            self.fixtures.save(h, request_payload=body, response_payload={"vectors": vectors})
        return [np.asarray(v, dtype=np.float32) for v in vectors]

    # -- plumbing ----------------------------------------------------------

    def _get_client(self) -> httpx.Client:
        if self._client is None:
            self._client = httpx.Client(
                base_url=self.config.base_url.rstrip("/"),
                timeout=self.config.timeout,
                headers={"Authorization": f"Bearer {self.config.api_key}"},
                transport=self._http_transport,
            )
        return self._client

    def _post_with_retries(self, path: str, body: dict) -> dict:
        client = self._get_client()
        last_error: Exception | None = None
        retry_after: float | None = None
        for attempt in range(1 + _MAX_RETRIES):
            if attempt:
                time.sleep(self._backoff_base * 2 ** (attempt - 1))
            try:
                response = client.post(path, json=body)
            except httpx.HTTPError as err:
                last_error = TransportError(f"request failed: {err}")
                log.warning("attempt %d: %s", attempt + 1, err)
                continue
            if response.status_code == 429:
                raw = response.headers.get("Retry-After")
                retry_after = float(raw) if raw else None
                last_error = RateLimited(retry_after)
                continue
            if response.status_code >= 500:
                last_error = TransportError(
                    f"server error {response.status_code}: {response.text[:200]}",
                    status=response.status_code,
                )
                continue
            if response.status_code >= 400:
                raise TransportError(
                    f"request rejected {response.status_code}: {response.text[:200]}",
                    status=response.status_code,
                )
            return response.json()
        assert last_error is not None
        raise last_error

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None


class GatewayEmbedder:
    """Embedder backed by the provider's embeddings endpoint."""

    def __init__(self, gateway: Gateway):
        self.gateway = gateway
        self.dimension: int | None = None

    @property
    def tag(self) -> str:
        return self.gateway.config.embed_model

    def embed_text(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: list[str]) -> list[np.ndarray]:
        vectors = self.gateway.embed_texts(texts)
        if vectors:
            self.dimension = int(vectors[0].shape[0])
        return vectors
