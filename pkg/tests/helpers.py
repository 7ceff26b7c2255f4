"""Shared test plumbing: scripted chat brains served through mock HTTP transports.

A "brain" is a function from the outgoing chat `messages` list to the
assistant text. Wrapping one in `make_gateway` gives a fully offline gateway
whose every response is decided by the test, while still exercising the real
HTTP client, retry, and record/replay code paths.
"""
from __future__ import annotations

import json

import httpx

from mentor.gateway import Gateway, ProviderConfig
from mentor.index import hash_embed

CRYPTO_QUESTION = "Find 213^(-1) mod 323"
CRYPTO_VALUE = "138"


def last_text(messages: list[dict], role: str) -> str:
    for message in reversed(messages):
        if message["role"] == role:
            return message["content"]
    return ""


def make_transport(brain, embed_dim: int = 16) -> httpx.MockTransport:
    """Chat requests go to `brain(messages)`; embeddings come from the hash embedder."""

    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content.decode("utf-8"))
        if request.url.path.endswith("/chat/completions"):
            content = brain(body["messages"])
            return httpx.Response(
                200,
                json={
                    "choices": [
                        {
                            "message": {"role": "assistant", "content": content},
                            "finish_reason": "stop",
                        }
                    ],
                    "usage": {"prompt_tokens": 1, "completion_tokens": 1},
                },
            )
        if request.url.path.endswith("/embeddings"):
            vectors = [hash_embed(text, embed_dim).tolist() for text in body["input"]]
            return httpx.Response(
                200,
                json={"data": [{"index": i, "embedding": v} for i, v in enumerate(vectors)]},
            )
        return httpx.Response(404, json={"error": f"unknown path {request.url.path}"})

    return httpx.MockTransport(handler)


def exploding_transport() -> httpx.MockTransport:
    """Fails the test on any network attempt; used to prove replay is offline."""

    def handler(request: httpx.Request) -> httpx.Response:
        raise AssertionError(f"unexpected network call to {request.url}")

    return httpx.MockTransport(handler)


def make_gateway(
    brain=None,
    *,
    transport: str = "live",
    fixtures_dir=None,
    model: str = "test-model",
    embed_dim: int = 16,
) -> Gateway:
    config = ProviderConfig(
        base_url="https://provider.test/v1",
        api_key="test-key",
        model=model,
        embed_model=f"fake-embed-{embed_dim}",
        transport=transport,
        fixtures_dir=str(fixtures_dir) if fixtures_dir else None,
    )
    if transport == "replay":
        http = exploding_transport()
    else:
        http = make_transport(brain, embed_dim)
    return Gateway(config, http_transport=http, backoff_base=0.0)


def usecase_crypto_brain(messages: list[dict]) -> str:
    """One full agent run: dispatch to crypto_solver, explain, answer, accept."""
    system = messages[0]["content"] if messages and messages[0]["role"] == "system" else ""
    user = last_text(messages, "user")
    if system.startswith("You check a mentor's draft answer"):
        return "ACCEPT"
    if system.startswith("You are a cryptography teaching assistant"):
        return (
            "Topic:\nModular multiplicative inverses.\n\n"
            "Key Concepts:\nAn inverse of a modulo m is the x with a*x = 1 (mod m); "
            "it exists exactly when gcd(a, m) = 1.\n\n"
            "Why It Matters:\nRSA key generation derives the private exponent d as "
            "the inverse of e modulo phi(n), so inverses are everywhere in key setup.\n\n"
            "Step-by-Step Solution:\nRun the extended Euclidean algorithm on 213 and "
            "323, track the coefficients, and reduce x modulo 323. "
            f"The verified result is {CRYPTO_VALUE}."
        )
    if user.startswith("Observation:"):
        return (
            "Thought: The solver verified the value, so I can answer the student.\n"
            f"Final Answer: The multiplicative inverse of 213 modulo 323 is {CRYPTO_VALUE}. "
            "You can check it yourself: 213 * 138 = 29394 = 91 * 323 + 1. The extended "
            "Euclidean algorithm finds it by unwinding gcd(213, 323) = 1."
        )
    return (
        "Thought: This is a modular arithmetic question, so I should use the exact solver.\n"
        "Action: crypto_solver\n"
        f"Action Input: {CRYPTO_QUESTION}"
    )


def accept_all_verifier(answer_text: str):
    """Brain that returns `answer_text` as a Final Answer and accepts every draft."""

    def brain(messages: list[dict]) -> str:
        system = messages[0]["content"] if messages and messages[0]["role"] == "system" else ""
        if system.startswith("You check a mentor's draft answer"):
            return "ACCEPT"
        return f"Thought: I can answer directly.\nFinal Answer: {answer_text}"

    return brain
