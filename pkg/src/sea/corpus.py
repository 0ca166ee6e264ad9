"""Document snapshot storage, retrieval chunks and URL resolution.

A snapshot is a JSON Lines file, one document per line with keys exactly
``{"url", "title", "content", "source"}``. The store keeps an in-memory
URL index on top of an append-only log; duplicate URLs resolve to the last
write so snapshot rebuilds stay idempotent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional
from urllib.parse import unquote, urlsplit

from .errors import ParseError, SchemaViolation
from .text import words

SOURCES = ("common_crawl", "wikipedia", "live")

_SNAPSHOT_KEYS = ("url", "title", "content", "source")


def host_of(url: str) -> Optional[str]:
    """Lowercased host portion of a URL, or None when unparseable."""
    try:
        host = urlsplit(url).netloc
    except ValueError:
        return None
    host = host.rsplit("@", 1)[-1].split(":", 1)[0].lower()
    return host or None


@dataclass(frozen=True)
class Document:
    url: str
    title: str
    content: str
    source: str = "common_crawl"

    def __post_init__(self):
        if not self.url or host_of(self.url) is None:
            raise ValueError(f"document url is not parseable: {self.url!r}")
        if self.source not in SOURCES:
            raise ValueError(f"unknown document source: {self.source!r}")
        if not self.content and self.source != "live":
            raise ValueError(
                f"empty content is only allowed for live placeholders: {self.url}"
            )

    @property
    def domain(self) -> str:
        return host_of(self.url) or ""


@dataclass(frozen=True)
class Chunk:
    doc_url: str
    ordinal: int
    text: str
    word_count: int

    @property
    def chunk_id(self) -> str:
        return f"{self.doc_url}#w{self.ordinal}"


def chunk_document(doc: Document, chunk_size: int = 100) -> list[Chunk]:
    """Split a document into consecutive fixed-size word windows.

    Every chunk except possibly the last has exactly ``chunk_size`` words;
    joining the chunk texts on single spaces reproduces the space-normalized
    content. Empty content yields no chunks.
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    toks = words(doc.content)
    return [
        Chunk(doc.url, i // chunk_size, " ".join(toks[i : i + chunk_size]),
              len(toks[i : i + chunk_size]))
        for i in range(0, len(toks), chunk_size)
    ]


def _doc_record(doc: Document) -> dict:
    # canonical key order; domain is derived, never stored
    return {"url": doc.url, "title": doc.title, "content": doc.content,
            "source": doc.source}


def _doc_line(doc: Document) -> str:
    return json.dumps(_doc_record(doc), ensure_ascii=False, separators=(",", ":"))


def read_snapshot(path: str | Path) -> Iterator[Document]:
    """Stream documents out of a snapshot file, validating each line."""
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, str(exc)) from exc
            if not isinstance(record, dict) or set(record) != set(_SNAPSHOT_KEYS):
                raise SchemaViolation(lineno, "keys",
                                      f"expected exactly {_SNAPSHOT_KEYS}")
            for key in _SNAPSHOT_KEYS:
                if not isinstance(record[key], str):
                    raise SchemaViolation(lineno, key, "must be a string")
            try:
                yield Document(**record)
            except ValueError as exc:
                raise SchemaViolation(lineno, "url", str(exc)) from exc


class DocumentStore:
    """URL-keyed snapshot with last-write-wins semantics.

    Single writer during the build phase; after ``freeze()`` the store is
    immutable and safe to share across threads. When bound to a path, adds
    are appended to the log immediately.
    """

    def __init__(self, path: Optional[str | Path] = None):
        self._path = Path(path) if path is not None else None
        self._docs: dict[str, Document] = {}
        self._frozen = False
        if self._path is not None and self._path.exists():
            for doc in read_snapshot(self._path):
                self._docs[doc.url] = doc

    @classmethod
    def load(cls, path: str | Path, freeze: bool = True) -> "DocumentStore":
        store = cls(path)
        if freeze:
            store.freeze()
        return store

    def add(self, doc: Document) -> None:
        if self._frozen:
            raise RuntimeError("store is frozen")
        self._docs[doc.url] = doc
        if self._path is not None:
            with self._path.open("a", encoding="utf-8") as fh:
                fh.write(_doc_line(doc) + "\n")

    def freeze(self) -> "DocumentStore":
        self._frozen = True
        return self

    def lookup_by_url(self, url: str) -> Optional[Document]:
        """The stored document whose URL matches exactly, else None."""
        return self._docs.get(url)

    def save(self, path: str | Path) -> None:
        """Write a compacted snapshot (one line per live URL)."""
        with Path(path).open("w", encoding="utf-8") as fh:
            for doc in self._docs.values():
                fh.write(_doc_line(doc) + "\n")

    def __iter__(self) -> Iterator[Document]:
        return iter(self._docs.values())

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, url: str) -> bool:
        return url in self._docs


def extract_wikipedia_title(url: str) -> Optional[str]:
    """Page title for ``…wikipedia.org/wiki/<title>`` URLs, else None.

    The final path segment is percent-decoded and underscores become spaces.
    Malformed URLs are treated as a miss, not an error.
    """
    try:
        parts = urlsplit(url)
    except ValueError:
        return None
    host = parts.netloc.split(":", 1)[0].lower()
    if host != "wikipedia.org" and not host.endswith(".wikipedia.org"):
        return None
    if not parts.path.startswith("/wiki/"):
        return None
    segment = parts.path.rsplit("/", 1)[-1]
    if not segment:
        return None
    return unquote(segment).replace("_", " ")
