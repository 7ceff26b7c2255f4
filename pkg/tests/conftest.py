"""Corpus and index fixtures shared across test modules."""
from __future__ import annotations

import json

import pytest

from mentor.index import HashEmbedder, build_index_from_manifest

# Small but realistic three-category corpus; each body comfortably exceeds one
# chunk at the sizes the tests use so retrieval has something to rank.
CORPUS_DOCS = [
    {
        "file": "ku_network.md",
        "category": "knowledge_units",
        "title": "Network Defense Knowledge Unit",
        "url": "https://kb.example.edu/ku/network-defense",
        "body": (
            "Network defense covers firewalls, intrusion detection systems, and "
            "network segmentation. Students learn packet filtering rules, stateful "
            "inspection, and how IDS signatures flag suspicious traffic. Hands-on "
            "labs use packet captures to trace port scans and brute force attempts."
        ),
    },
    {
        "file": "ku_crypto.md",
        "category": "knowledge_units",
        "title": "Applied Cryptography Knowledge Unit",
        "url": "https://kb.example.edu/ku/applied-crypto",
        "body": (
            "Applied cryptography introduces symmetric ciphers, public key systems, "
            "and hashing. Modular arithmetic underpins RSA: key generation computes "
            "a modular inverse with the extended Euclidean algorithm, and encryption "
            "is modular exponentiation. Students practice with small toy moduli."
        ),
    },
    {
        "file": "career_soc.md",
        "category": "career_pathways",
        "title": "Security Operations Career Path",
        "url": "https://kb.example.edu/careers/soc-analyst",
        "body": (
            "A security operations center analyst monitors alerts, triages incidents, "
            "and escalates confirmed intrusions. Entry roles expect networking "
            "fundamentals, log analysis, and one scripting language. The path grows "
            "into incident response lead and threat hunting positions."
        ),
    },
    {
        "file": "catalog_sec.md",
        "category": "program_catalogs",
        "title": "Security Program Course Catalog",
        "url": "https://kb.example.edu/catalog/security",
        "body": (
            "The security program requires SEC301 Introduction to Security, SEC350 "
            "Network Defense, and SEC420 Applied Cryptography. SEC420 covers modular "
            "arithmetic, RSA, and key exchange; its prerequisite is discrete math. "
            "Electives include forensics and malware analysis."
        ),
    },
]


def write_corpus(root) -> str:
    """Materialize the corpus files plus a manifest; returns the manifest path."""
    root.mkdir(parents=True, exist_ok=True)
    lines = []
    for doc in CORPUS_DOCS:
        (root / doc["file"]).write_text(doc["body"], encoding="utf-8")
        lines.append(
            json.dumps(
                {
                    "path": doc["file"],
                    "category": doc["category"],
                    "title": doc["title"],
                    "url": doc["url"],
                }
            )
        )
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(manifest)


@pytest.fixture()
def corpus_manifest(tmp_path):
    return write_corpus(tmp_path / "corpus")


@pytest.fixture()
def hash_index(corpus_manifest):
    """(index, embedder) over the test corpus, chunked small enough to split docs."""
    embedder = HashEmbedder(64)
    index, result = build_index_from_manifest(
        corpus_manifest, embedder, size=200, overlap=40
    )
    assert not result.errors
    return index, embedder
