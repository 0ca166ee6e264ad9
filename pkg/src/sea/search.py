"""Ranked document search behind a black-box engine contract.

Two engines implement it: a local Okapi BM25 index (offline, deterministic)
and a remote JSON search API client with caching. The news-augmented dual
search used by the collection tool works with either.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import httpx

from .corpus import Document, DocumentStore, chunk_document, extract_wikipedia_title
from .errors import EmptyQuery, EngineUnavailable, QuotaExceeded
from .text import index_tokens

# small positive floor keeps scores non-negative in tiny corpora, where the
# classic Okapi idf goes to zero or below
IDF_FLOOR = 1e-6

API_KEY_ENV = "SEA_SEARCH_API_KEY"


@dataclass(frozen=True)
class SearchQuery:
    text: str
    augment_news: bool = False


@dataclass(frozen=True)
class SearchResults:
    query: SearchQuery
    results: tuple[Document, ...]
    engine_id: str

    def urls(self) -> list[str]:
        return [doc.url for doc in self.results]


class Bm25Index:
    """Okapi BM25 over whole documents or their fixed-size chunks.

    Chunk granularity scores each 100-word window and keeps a document's
    best chunk, for parity with dense retrieval. Ranking ties break on
    ascending URL. Immutable after construction.
    """

    def __init__(self, store: DocumentStore, k1: float = 1.2, b: float = 0.75,
                 granularity: str = "document", chunk_size: int = 100):
        if granularity not in ("document", "chunk"):
            raise ValueError(f"unknown granularity: {granularity!r}")
        self.k1 = k1
        self.b = b
        self.granularity = granularity
        entries: list[tuple[str, str]] = []  # (url, indexed text)
        for doc in store:
            if granularity == "document":
                entries.append((doc.url, doc.content))
            else:
                for chunk in chunk_document(doc, chunk_size):
                    entries.append((doc.url, chunk.text))
        self._urls = [url for url, _ in entries]
        self._tf = [Counter(index_tokens(text)) for _, text in entries]
        self._lens = [sum(tf.values()) for tf in self._tf]
        n = len(entries)
        self._avg_len = (sum(self._lens) / n) if n else 0.0
        df = Counter()
        for tf in self._tf:
            df.update(tf.keys())
        self._idf = {
            term: max(math.log((n - d + 0.5) / (d + 0.5)), IDF_FLOOR)
            for term, d in df.items()
        }

    def __len__(self) -> int:
        return len(self._urls)

    def bm25_score(self, entry_idx: int, query_terms: list[str]) -> float:
        tf = self._tf[entry_idx]
        length = self._lens[entry_idx]
        norm = self.k1 * (1 - self.b + self.b * length / self._avg_len)
        score = 0.0
        for term in query_terms:
            f = tf.get(term, 0)
            if f == 0:
                continue
            # terms absent from the corpus contribute nothing: f is 0 there
            score += self._idf[term] * f * (self.k1 + 1) / (f + norm)
        return score

    def rank(self, query_terms: list[str], n: int) -> list[tuple[str, float]]:
        """Top-n (url, score) pairs; documents with no matching term drop out."""
        hits: dict[str, float] = {}
        for i, url in enumerate(self._urls):
            score = self.bm25_score(i, query_terms)
            if score <= 0.0:
                continue
            if url not in hits or score > hits[url]:
                hits[url] = score
        ranked = sorted(hits.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:n]


class LocalSearchEngine:
    """Deterministic stand-in for the black-box engine, backed by BM25."""

    def __init__(self, store: DocumentStore, k1: float = 1.2, b: float = 0.75,
                 granularity: str = "document"):
        self._store = store
        self._index = Bm25Index(store, k1=k1, b=b, granularity=granularity)
        self.engine_id = f"local-bm25-{granularity}"

    def search(self, query: SearchQuery, n: int = 5) -> SearchResults:
        text = query.text.strip()
        if not text:
            raise EmptyQuery("search query is blank")
        if n < 1:
            raise ValueError("n must be >= 1")
        terms = index_tokens(text)
        docs = []
        for url, _score in self._index.rank(terms, n):
            doc = self._store.lookup_by_url(url)
            if doc is not None:
                docs.append(doc)
        return SearchResults(query, tuple(docs), self.engine_id)


def dual_news_search(engine, query: SearchQuery, n: int = 5) -> SearchResults:
    """Run the query twice, once with "news" appended, and merge.

    The top two news hits lead, followed by the plain results; the merged
    list is URL-deduplicated and truncated to n. Without ``augment_news``
    this is a plain search.
    """
    if not query.augment_news:
        return engine.search(query, n)
    news = engine.search(SearchQuery(query.text + " news", True), n)
    plain = engine.search(SearchQuery(query.text, True), n)
    merged: list[Document] = []
    seen: set[str] = set()
    for doc in list(news.results[:2]) + list(plain.results):
        if doc.url in seen:
            continue
        seen.add(doc.url)
        merged.append(doc)
        if len(merged) == n:
            break
    return SearchResults(query, tuple(merged), engine.engine_id)


def parse_web_pages(payload: dict) -> list[tuple[str, str]]:
    """Adapter for the common ``{"webPages": {"value": [...]}}`` wire shape."""
    try:
        values = payload["webPages"]["value"]
    except (KeyError, TypeError) as exc:
        raise EngineUnavailable(f"unexpected response shape: {exc}") from exc
    out = []
    for item in values:
        url = item.get("url")
        name = item.get("name", "")
        if url:
            out.append((str(url), str(name)))
    return out


class RemoteSearchClient:
    """Client for a JSON web-search API with caching and URL resolution.

    Result content is filled from the document snapshot by exact URL, then
    via Wikipedia title extraction against the Wikipedia snapshot, and
    otherwise left empty as a live placeholder. Responses are cached to a
    JSONL file keyed by (query, n). Concurrent requests are allowed; a
    minimum interval between outbound calls gives crude per-host rate
    limiting.
    """

    engine_id = "remote-api"

    def __init__(self, endpoint: str, api_key: Optional[str] = None, *,
                 store: Optional[DocumentStore] = None,
                 wikipedia: Optional[DocumentStore] = None,
                 cache_path: Optional[str | Path] = None,
                 timeout: float = 10.0,
                 min_interval: float = 0.0,
                 parse_response: Callable[[dict], list[tuple[str, str]]] = parse_web_pages,
                 transport: Optional[httpx.BaseTransport] = None):
        self.endpoint = endpoint
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self._store = store
        self._wiki_titles: dict[str, Document] = {}
        if wikipedia is not None:
            for doc in wikipedia:
                self._wiki_titles[doc.title.lower()] = doc
        self._cache_path = Path(cache_path) if cache_path else None
        self._cache: dict[tuple[str, int], dict] = {}
        if self._cache_path is not None and self._cache_path.exists():
            with self._cache_path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        self._cache[(rec["query"], rec["n"])] = rec
        self._parse = parse_response
        self._min_interval = min_interval
        self._last_request = 0.0
        self._lock = threading.Lock()
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def search(self, query: SearchQuery, n: int = 5) -> SearchResults:
        text = query.text.strip()
        if not text:
            raise EmptyQuery("search query is blank")
        if n < 1:
            raise ValueError("n must be >= 1")
        record = self._cache.get((text, n))
        if record is None:
            record = self._fetch(text, n)
            self._cache[(text, n)] = record
            if self._cache_path is not None:
                with self._cache_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        docs = []
        seen: set[str] = set()
        for url, title in zip(record["urls"], record["titles"]):
            if url in seen:
                continue
            seen.add(url)
            doc = self._resolve(url, title)
            if doc is not None:
                docs.append(doc)
        return SearchResults(query, tuple(docs[:n]), self.engine_id)

    def _fetch(self, text: str, n: int) -> dict:
        with self._lock:
            wait = self._min_interval - (time.monotonic() - self._last_request)
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()
        headers = {}
        if self.api_key:
            headers["Ocp-Apim-Subscription-Key"] = self.api_key
        try:
            resp = self._client.get(self.endpoint,
                                    params={"q": text, "count": n},
                                    headers=headers)
        except httpx.HTTPError as exc:
            raise EngineUnavailable(f"request failed: {exc}") from exc
        if resp.status_code in (403, 429):
            raise QuotaExceeded(f"engine returned HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise EngineUnavailable(f"engine returned HTTP {resp.status_code}")
        try:
            pairs = self._parse(resp.json())
        except json.JSONDecodeError as exc:
            raise EngineUnavailable(f"response is not JSON: {exc}") from exc
        pairs = pairs[:n]
        return {
            "query": text,
            "n": n,
            "urls": [u for u, _ in pairs],
            "titles": [t for _, t in pairs],
            "fetched_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }

    def _resolve(self, url: str, title: str) -> Optional[Document]:
        if self._store is not None:
            doc = self._store.lookup_by_url(url)
            if doc is not None:
                return doc
        wiki_title = extract_wikipedia_title(url)
        if wiki_title is not None:
            doc = self._wiki_titles.get(wiki_title.lower())
            if doc is not None:
                return doc
        try:
            return Document(url=url, title=title, content="", source="live")
        except ValueError:
            return None  # engine handed back an unusable URL; skip it

    def close(self) -> None:
        self._client.close()
