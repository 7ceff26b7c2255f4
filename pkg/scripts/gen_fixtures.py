#!/usr/bin/env python3
"""Regenerate the shipped replay fixtures and SSE transcripts.

Runs three scripted conversations through the real HTTP service with a
mock provider, recording every chat completion under fixtures/usecase{1,2,3}.
Each conversation is then replayed against a transport that refuses all
network traffic, and the replayed SSE bodies must match the recorded ones
byte for byte before anything is kept.

Run from the repository root: python scripts/gen_fixtures.py
"""
from __future__ import annotations

import json
import re
import shutil
import sys
import tempfile
from pathlib import Path

import httpx
from fastapi.testclient import TestClient

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from mentor.config import AppConfig  # noqa: E402
from mentor.gateway import Gateway, ProviderConfig  # noqa: E402
from mentor.index import HashEmbedder, VectorIndex, build_index_from_manifest  # noqa: E402
from mentor.service import Runtime, create_app  # noqa: E402
from mentor.sessions import SessionStore  # noqa: E402

MANIFEST = ROOT / "data" / "corpus" / "manifest.jsonl"
FIXTURES = ROOT / "fixtures"
TRANSCRIPTS = FIXTURES / "transcripts"

# Shipped fixtures must replay under the default provider config.
MODEL = "gpt-4o"

CRYPTO_QUESTION = "Find 213^(-1) mod 323"
KU_QUESTION = "Which knowledge units should I study to get good at network security?"
CAREER_QUESTION = "What does a SOC analyst actually do day to day?"
FOLLOWUP_QUESTION = "Which courses should I take to prepare for that role?"
REPHRASED_FOLLOWUP = "Which courses should a student take to prepare for a SOC analyst role?"

CRYPTO_EXPLANATION = """Topic
Modular multiplicative inverses, solved with the extended Euclidean algorithm.

Key Concepts
The inverse of 213 modulo 323 is the number x with 213 * x = 1 (mod 323).
An inverse exists exactly when gcd(213, 323) = 1, and the extended Euclidean
algorithm finds it by expressing that gcd as an integer combination of the
two numbers.

Why It Matters
Modular inverses are the core of RSA key generation: the private exponent is
the inverse of the public exponent modulo Euler's totient of the modulus.
Being able to compute one by hand is how you know a key pair is consistent.

Step-by-Step Solution
Run the Euclidean algorithm: 323 = 1 * 213 + 110, 213 = 1 * 110 + 103,
110 = 1 * 103 + 7, 103 = 14 * 7 + 5, 7 = 1 * 5 + 2, 5 = 2 * 2 + 1. Back
substitution expresses 1 as a combination of 213 and 323, giving the
coefficient 138 for 213. Check: 213 * 138 = 29394 = 91 * 323 + 1. The
verified result is 138."""

CRYPTO_FINAL = """Thought: The solver verified the inverse, so I can answer with the exact value.
Final Answer: The multiplicative inverse of 213 modulo 323 is 138.

It exists because gcd(213, 323) = 1. The extended Euclidean algorithm walks
the remainder chain 323, 213, 110, 103, 7, 5, 2, 1 and back-substitutes to
write 1 = 138 * 213 - 91 * 323. You can check it directly:
213 * 138 = 29394 = 91 * 323 + 1, so 213 * 138 = 1 (mod 323)."""

KU_ADVISOR = """The knowledge base covers this directly in the Network Security knowledge
unit ([1], [2]). Start there: it teaches packet filtering versus stateful
firewalls, intrusion detection and prevention, network segmentation, and
VPN/TLS, and its labs build the traffic analysis habits the later material
assumes. The Applied Cryptography unit is the natural companion, since the
transport encryption in the network unit leans on its primitives. Passages
[1] and [2] describe the unit's topics and outcomes in detail."""

KU_FINAL = """Thought: The knowledge base lookup names the right unit, so I can summarize it for the student.
Final Answer: Study the Network Security knowledge unit first. It covers the
firewall models (packet filtering versus stateful inspection), intrusion
detection and prevention, network segmentation into zones, and VPN/TLS for
traffic protection, with labs that teach packet capture analysis. Pair it
with the Applied Cryptography unit afterwards, because the transport
encryption material builds on those primitives. The knowledge base passages
I cited describe the unit's full topic list and outcomes."""

CAREER_ADVISOR = """According to the SOC analyst pathway description ([1], [2]), the day-to-day
work is alert triage and investigation. Tier 1 analysts triage alerts from
intrusion detection sensors and endpoint agents, separating false positives
from real events. Tier 2 analysts investigate escalations by pulling packet
captures, reading authentication logs, and reconstructing timelines. Tier 3
shades into threat hunting and detection engineering. The pathway notes that
clear written communication about incidents matters as much as the
technical digging."""

CAREER_FINAL = """Thought: The pathway lookup describes the role tiers, so I can answer concretely.
Final Answer: A SOC analyst's day is built around the alert queue. At Tier 1
you triage alerts from intrusion detection sensors and endpoint agents and
separate false positives from real events. At Tier 2 you investigate
escalations: pulling packet captures, reading authentication logs, and
reconstructing the timeline of an incident. Senior analysts move into threat
hunting and detection engineering, writing the rules the lower tiers
consume. Expect to write up every incident clearly; communication is half
the job."""

COURSES_ADVISOR = """The catalog's core sequence ([1], [2]) is the place to start: SEC301
Foundations of Cybersecurity, then SEC350 Network Security, which applies
the Network Security knowledge unit with a lab sequence on sensors and
detection, plus SEC420 Applied Cryptography to finish the core. For the SOC
direction specifically, the electives passage recommends SEC430 Network
Defense Operations, where students run a simulated SOC for the term, and an
incident response capstone or practicum to finish."""

COURSES_FINAL = """Thought: The catalog lookup gives a concrete sequence, so I can lay out the plan.
Final Answer: Take the core sequence first: SEC301 Foundations of
Cybersecurity, then SEC350 Network Security, whose labs cover the sensor
placement and detection work SOC analysts live in, and SEC420 Applied
Cryptography to complete the core. Then pick SEC430 Network Defense
Operations as your elective; it runs a simulated SOC for the whole term,
which is the closest thing to the job itself. Finish with the incident
response capstone or the practicum if you can get a placement."""


def _openai_chat_response(text: str) -> dict:
    return {
        "choices": [{"message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 0, "completion_tokens": 0},
    }


def _question_in(messages: list[dict]) -> str:
    """Most recent user turn that is neither an observation nor a reminder."""
    for msg in reversed(messages):
        if msg["role"] != "user":
            continue
        content = msg["content"]
        if content.startswith("Observation:") or "did not follow the required format" in content:
            continue
        return content
    raise AssertionError("no question found in mentor prompt")


def _advisor_reply(user: str) -> str:
    match = re.search(r"^Question: (.+)$", user, re.MULTILINE)
    question = match[1] if match else user
    if "courses" in question.lower():
        return COURSES_ADVISOR
    if "soc analyst" in question.lower():
        return CAREER_ADVISOR
    return KU_ADVISOR


def _mentor_reply(messages: list[dict]) -> str:
    question = _question_in(messages)
    observed = messages[-1]["content"].startswith("Observation:")
    lowered = question.lower()
    if "mod" in lowered:
        if observed:
            return CRYPTO_FINAL
        return (
            "Thought: This is modular arithmetic; the solver computes it exactly.\n"
            f"Action: crypto_solver\nAction Input: {question}"
        )
    if "courses" in lowered:
        if observed:
            return COURSES_FINAL
        return (
            "Thought: Course planning questions belong to the catalog advisor.\n"
            f"Action: kb_catalog_advisor\nAction Input: {question}"
        )
    if "soc analyst" in lowered:
        if observed:
            return CAREER_FINAL
        return (
            "Thought: This is a career question; the pathway knowledge base has it.\n"
            f"Action: kb_career_pathways\nAction Input: {question}"
        )
    if observed:
        return KU_FINAL
    return (
        "Thought: The student is asking what to study; the knowledge unit base covers that.\n"
        f"Action: kb_knowledge_units\nAction Input: {question}"
    )


def scripted_brain(request: httpx.Request) -> httpx.Response:
    if request.url.path.endswith("/embeddings"):
        raise AssertionError("the default embedder is local; no embedding calls expected")
    body = json.loads(request.content.decode("utf-8"))
    messages = body["messages"]
    first = messages[0]["content"]
    if first.startswith("You check a mentor's draft answer"):
        reply = "ACCEPT"
    elif first.startswith("You are a cryptography teaching assistant"):
        reply = CRYPTO_EXPLANATION
    elif first.startswith("You are a cybersecurity study advisor"):
        reply = _advisor_reply(messages[-1]["content"])
    elif first.startswith("Rewrite the student's latest question"):
        reply = REPHRASED_FOLLOWUP
    elif first.startswith("You are a patient cybersecurity mentor"):
        reply = _mentor_reply(messages)
    else:
        raise AssertionError(f"unexpected prompt: {first[:80]!r}")
    return httpx.Response(200, json=_openai_chat_response(reply))


def _refuse_network(request: httpx.Request) -> httpx.Response:
    raise AssertionError(f"replay must not touch the network (got {request.url})")


def build_client(fixtures_dir: Path, transport: str, workdir: Path, with_corpus: bool) -> TestClient:
    provider = ProviderConfig(
        model=MODEL,
        api_key="local-recording",
        transport=transport,
        fixtures_dir=str(fixtures_dir),
    )
    config = AppConfig(
        provider=provider,
        index_path=str(workdir / "index.jsonl"),
        sessions_dir=str(workdir / "sessions"),
    )
    http = httpx.MockTransport(scripted_brain if transport == "record" else _refuse_network)
    embedder = HashEmbedder()
    if with_corpus:
        index, result = build_index_from_manifest(MANIFEST, embedder)
        if result.errors:
            raise SystemExit(f"corpus ingest failed: {result.errors}")
    else:
        index = VectorIndex(dimension=embedder.dimension, embedder_tag=embedder.tag)
    runtime = Runtime(
        config=config,
        gateway=Gateway(provider, http_transport=http, backoff_base=0.0),
        embedder=embedder,
        index=index,
        store=SessionStore(config.sessions_dir),
    )
    return TestClient(create_app(config, runtime))


def run_rounds(client: TestClient, questions: list[str]) -> list[bytes]:
    created = client.post("/api/sessions")
    assert created.status_code == 201, created.text
    session_id = created.json()["session_id"]
    bodies = []
    for question in questions:
        resp = client.post(f"/api/sessions/{session_id}/messages", json={"content": question})
        assert resp.status_code == 200, resp.text
        body = resp.content
        assert b"event: error" not in body, body.decode("utf-8")
        assert body.endswith(b"event: done\ndata: {}\n\n")
        bodies.append(body)
    return bodies


def event_kinds(body: bytes) -> list[str]:
    return [
        line.split(" ", 1)[1]
        for line in body.decode("utf-8").splitlines()
        if line.startswith("event: ")
    ]


def generate(name: str, questions: list[str], expected_kinds: list[list[str]], with_corpus: bool) -> None:
    fixtures_dir = FIXTURES / name
    if fixtures_dir.exists():
        shutil.rmtree(fixtures_dir)

    with tempfile.TemporaryDirectory() as tmp:
        client = build_client(fixtures_dir, "record", Path(tmp), with_corpus)
        recorded = run_rounds(client, questions)
    with tempfile.TemporaryDirectory() as tmp:
        client = build_client(fixtures_dir, "replay", Path(tmp), with_corpus)
        replayed = run_rounds(client, questions)

    for i, (rec, rep) in enumerate(zip(recorded, replayed), start=1):
        if rec != rep:
            raise SystemExit(f"{name} round {i}: replay diverged from the recording")
        kinds = event_kinds(rec)
        if kinds != expected_kinds[i - 1]:
            raise SystemExit(f"{name} round {i}: unexpected event kinds {kinds}")
        suffix = f"_round{i}" if len(questions) > 1 else ""
        out = TRANSCRIPTS / f"{name}{suffix}.sse"
        out.write_bytes(rec)

    count = len(list(fixtures_dir.glob("*.json")))
    print(f"{name}: {count} fixtures, {len(questions)} round(s) replayed byte-identical")


def main() -> None:
    TRANSCRIPTS.mkdir(parents=True, exist_ok=True)
    one_round = [["thinking", "tool_call", "tool_result", "answer", "sources", "done"]]
    generate("usecase1", [CRYPTO_QUESTION], one_round, with_corpus=False)
    generate("usecase2", [KU_QUESTION], one_round, with_corpus=True)
    generate("usecase3", [CAREER_QUESTION, FOLLOWUP_QUESTION], one_round * 2, with_corpus=True)


if __name__ == "__main__":
    main()
