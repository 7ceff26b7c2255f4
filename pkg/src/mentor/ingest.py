"""Corpus loading and chunking.

Chunks are fixed-size character windows: chunk k starts at k*(size-overlap),
so neighbours share exactly `overlap` characters and the original body can be
rebuilt by dropping each later chunk's first `overlap` characters.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MentorError
from .model import DocumentCategory

log = logging.getLogger(__name__)


class EmptyDocument(MentorError):
    pass


class InvalidChunking(MentorError):
    pass


class ManifestError(MentorError):
    pass


@dataclass(frozen=True)
class SourceDocument:
    id: str
    title: str
    url: str
    category: DocumentCategory
    body: str


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    index: int
    text: str
    char_start: int
    char_end: int


def load_document(raw: str, category: DocumentCategory, title: str, url: str) -> SourceDocument:
    """Normalize newlines and assign a stable content-derived id."""
    body = raw.replace("\r\n", "\n")
    if not body.strip():
        raise EmptyDocument(f"document {title!r} has no content")
    digest = hashlib.sha1(f"{category.value}|{title}|{body}".encode("utf-8")).hexdigest()[:12]
    return SourceDocument(id=digest, title=title, url=url, category=category, body=body)


def _check_chunk_params(size: int, overlap: int) -> None:
    if size < 1:
        raise InvalidChunking(f"chunk size must be positive, got {size}")
    if overlap < 0 or overlap >= size:
        raise InvalidChunking(f"overlap must satisfy 0 <= overlap < size, got {overlap} vs {size}")


def chunk_document(doc: SourceDocument, size: int = 1000, overlap: int = 200) -> list[Chunk]:
    _check_chunk_params(size, overlap)
    body = doc.body
    step = size - overlap
    chunks: list[Chunk] = []
    k = 0
    while k == 0 or k * step < len(body) - overlap:
        start = k * step
        end = min(start + size, len(body))
        chunks.append(
            Chunk(
                chunk_id=f"{doc.id}:{k:04d}",
                doc_id=doc.id,
                index=k,
                text=body[start:end],
                char_start=start,
                char_end=end,
            )
        )
        k += 1
    return chunks


@dataclass
class IngestResult:
    documents: list[SourceDocument] = field(default_factory=list)
    chunks: list[Chunk] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def document_count(self) -> int:
        return len(self.documents)

    @property
    def chunk_count(self) -> int:
        return len(self.chunks)


def ingest_corpus(
    entries: list[tuple[str, DocumentCategory, str, str]],
    size: int = 1000,
    overlap: int = 200,
) -> IngestResult:
    """Load and chunk (raw, category, title, url) entries; a bad entry is
    reported in `errors` without aborting the rest."""
    _check_chunk_params(size, overlap)
    result = IngestResult()
    for raw, category, title, url in entries:
        try:
            doc = load_document(raw, category, title, url)
        except MentorError as err:
            result.errors.append(f"{title}: {err}")
            log.warning("skipping corpus entry %r: %s", title, err)
            continue
        result.documents.append(doc)
        result.chunks.extend(chunk_document(doc, size=size, overlap=overlap))
    return result


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    category: DocumentCategory
    title: str
    url: str


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Parse a JSONL manifest with path/category/title/url per line."""
    entries = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            entries.append(
                ManifestEntry(
                    path=row["path"],
                    category=DocumentCategory(row["category"]),
                    title=row["title"],
                    url=row["url"],
                )
            )
        except (json.JSONDecodeError, KeyError, ValueError) as err:
            raise ManifestError(f"manifest line {n}: {err}") from err
    return entries
