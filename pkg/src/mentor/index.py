"""In-memory vector index with exact cosine search and JSONL persistence."""
from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, MentorError
from .ingest import IngestResult, ingest_corpus, read_manifest
from .model import DocumentCategory, SourceRef


class ZeroVector(MentorError):
    pass


class DimensionMismatch(MentorError):
    pass


class CorruptIndex(MentorError):
    pass


class EmbedderMismatch(MentorError):
    pass


DEFAULT_DIMENSION = 256
_WORD = re.compile(r"[a-z0-9]+")


def _stable_hash64(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "big")


def hash_embed(text: str, dimension: int = DEFAULT_DIMENSION) -> np.ndarray:
    """Deterministic bag-of-words embedding; no network, no model weights.

    Each lowercase alphanumeric token lands in bucket `hash % dimension`
    with its sign taken from the hash's top bit; the accumulated vector is
    L2-normalized.
    """
    if dimension < 1:
        raise InvalidArgument("dimension must be positive")
    tokens = _WORD.findall(text.lower())
    if not tokens:
        raise ZeroVector("text has no alphanumeric tokens to embed")
    vec = np.zeros(dimension, dtype=np.float64)
    for token in tokens:
        h = _stable_hash64(token)
        sign = -1.0 if (h >> 63) & 1 else 1.0
        vec[h % dimension] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ZeroVector("token signs cancelled out; nothing to normalize")
    return (vec / norm).astype(np.float32)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"cannot compare shapes {u.shape} and {v.shape}")
    norm_u = float(np.linalg.norm(u))
    norm_v = float(np.linalg.norm(v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ZeroVector("cosine is undefined for a zero-magnitude vector")
    return float(np.dot(u, v) / (norm_u * norm_v))


class HashEmbedder:
    """Offline embedder; the tag pins scheme and dimension so an index can
    refuse vectors produced any other way."""

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        self.dimension = dimension

    @property
    def tag(self) -> str:
        return f"hash-{self.dimension}"

    def embed_text(self, text: str) -> np.ndarray:
        return hash_embed(text, self.dimension)

    def embed_many(self, texts: list[str]) -> list[np.ndarray]:
        return [hash_embed(t, self.dimension) for t in texts]


@dataclass(frozen=True)
class EmbeddedChunk:
    chunk_id: str
    doc_id: str
    index: int
    text: str
    char_start: int
    char_end: int
    category: DocumentCategory
    title: str
    url: str
    vector: np.ndarray

    @classmethod
    def from_chunk(cls, chunk, vector, *, title: str, url: str, category: DocumentCategory) -> "EmbeddedChunk":
        return cls(
            chunk_id=chunk.chunk_id,
            doc_id=chunk.doc_id,
            index=chunk.index,
            text=chunk.text,
            char_start=chunk.char_start,
            char_end=chunk.char_end,
            category=category,
            title=title,
            url=url,
            vector=np.asarray(vector, dtype=np.float32),
        )

    @property
    def ref(self) -> SourceRef:
        return SourceRef(title=self.title, url=self.url, category=self.category, chunk_id=self.chunk_id)


@dataclass(frozen=True)
class ScoredHit:
    ref: SourceRef
    text: str
    score: float


class VectorIndex:
    """Exact cosine top-k over an in-memory table.

    Writes go through one lock and searches work on a snapshot, so a reader
    never observes a half-applied upsert.
    """

    def __init__(self, dimension: int | None = None, embedder_tag: str | None = None):
        self.dimension = dimension
        self.embedder_tag = embedder_tag
        self._entries: dict[str, EmbeddedChunk] = {}
        self._lock = threading.RLock()

    def size(self) -> int:
        return len(self._entries)

    def items(self) -> list[EmbeddedChunk]:
        with self._lock:
            return list(self._entries.values())

    def upsert(self, items, *, embedder_tag: str | None = None) -> None:
        """Insert or replace by chunk id; validates everything before touching the table."""
        items = list(items)
        with self._lock:
            if embedder_tag is not None:
                if self.embedder_tag is not None and embedder_tag != self.embedder_tag:
                    raise EmbedderMismatch(
                        f"index holds {self.embedder_tag!r} vectors, refusing {embedder_tag!r}"
                    )
                if self.embedder_tag is None:
                    self.embedder_tag = embedder_tag
            dimension = self.dimension
            for item in items:
                vec = item.vector
                if vec.ndim != 1:
                    raise DimensionMismatch(f"vector for {item.chunk_id} must be 1-D")
                if dimension is None:
                    dimension = int(vec.shape[0])
                elif int(vec.shape[0]) != dimension:
                    raise DimensionMismatch(
                        f"vector for {item.chunk_id} has dimension {vec.shape[0]}, index uses {dimension}"
                    )
                if not np.all(np.isfinite(vec)):
                    raise InvalidArgument(f"vector for {item.chunk_id} has non-finite values")
            self.dimension = dimension
            for item in items:
                self._entries[item.chunk_id] = item

    def search(self, query: np.ndarray, k: int = 4, *, category: DocumentCategory | None = None) -> list[ScoredHit]:
        """Full-scan top-k by cosine; ties broken by ascending chunk id."""
        if k < 1:
            raise InvalidArgument("k must be at least 1")
        snapshot = self.items()
        scored = []
        for item in snapshot:
            if category is not None and item.category != category:
                continue
            scored.append((cosine(query, item.vector), item))
        scored.sort(key=lambda pair: (-pair[0], pair[1].chunk_id))
        return [ScoredHit(ref=item.ref, text=item.text, score=score) for score, item in scored[:k]]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        with self._lock:
            header = {"dimension": self.dimension, "embedder_tag": self.embedder_tag, "version": 1}
            lines = [json.dumps(header, sort_keys=True)]
            for chunk_id in sorted(self._entries):
                item = self._entries[chunk_id]
                lines.append(
                    json.dumps(
                        {
                            "chunk_id": item.chunk_id,
                            "doc_id": item.doc_id,
                            "index": item.index,
                            "text": item.text,
                            "char_start": item.char_start,
                            "char_end": item.char_end,
                            "category": item.category.value,
                            "title": item.title,
                            "url": item.url,
                            "vector": [float(x) for x in item.vector],
                        },
                        sort_keys=True,
                        ensure_ascii=False,
                    )
                )
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise CorruptIndex(f"{path}: empty index file")
        try:
            header = json.loads(lines[0])
            if header.get("version") != 1:
                raise CorruptIndex(f"{path}: unsupported index version {header.get('version')!r}")
            index = cls(dimension=header["dimension"], embedder_tag=header["embedder_tag"])
        except (json.JSONDecodeError, KeyError) as err:
            raise CorruptIndex(f"{path}: line 1: bad header: {err}") from err
        items = []
        for n, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                items.append(
                    EmbeddedChunk(
                        chunk_id=row["chunk_id"],
                        doc_id=row["doc_id"],
                        index=row["index"],
                        text=row["text"],
                        char_start=row["char_start"],
                        char_end=row["char_end"],
                        category=DocumentCategory(row["category"]),
                        title=row["title"],
                        url=row["url"],
                        vector=np.asarray(row["vector"], dtype=np.float32),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
                raise CorruptIndex(f"{path}: line {n}: {err}") from err
        index.upsert(items)
        return index


def build_index_from_manifest(
    manifest_path: str | Path,
    embedder,
    *,
    size: int = 1000,
    overlap: int = 200,
    index: VectorIndex | None = None,
) -> tuple[VectorIndex, IngestResult]:
    """Read a manifest, chunk each readable file, embed, and upsert.

    Per-entry failures (missing file, empty document, wordless chunk) are
    collected in the result instead of aborting the batch.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    file_errors: list[str] = []
    entries = []
    for entry in read_manifest(manifest_path):
        doc_path = Path(entry.path)
        if not doc_path.is_absolute():
            doc_path = base / doc_path
        try:
            raw = doc_path.read_text(encoding="utf-8")
        except OSError as err:
            file_errors.append(f"{entry.path}: {err}")
            continue
        entries.append((raw, entry.category, entry.title, entry.url))

    result = ingest_corpus(entries, size=size, overlap=overlap)
    result.errors = file_errors + result.errors

    if index is None:
        index = VectorIndex(dimension=getattr(embedder, "dimension", None), embedder_tag=embedder.tag)
    docs = {doc.id: doc for doc in result.documents}
    embedded = []
    for chunk in result.chunks:
        doc = docs[chunk.doc_id]
        try:
            vector = embedder.embed_text(chunk.text)
        except ZeroVector as err:
            result.errors.append(f"{doc.title} chunk {chunk.index}: {err}")
            continue
        embedded.append(
            EmbeddedChunk.from_chunk(chunk, vector, title=doc.title, url=doc.url, category=doc.category)
        )
    index.upsert(embedded, embedder_tag=embedder.tag)
    return index, result
