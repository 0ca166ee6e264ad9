"""Dense chunk retrieval: hashed text embeddings and an exact top-N index.

The embedder stands in for a learned bi-encoder: signed feature hashing of
lowercased unigrams and bigrams, L2-normalized, so similarity is meaningful
without trained weights and identical on every platform. Search is an exact
inner-product scan; approximate backends can slot in behind the same
contract if corpora outgrow it.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyText, NoDocuments
from .text import index_tokens

INDEX_MAGIC = b"SDI1"


# features repeat heavily across a corpus; memoize their digests (benign
# races, entries are pure functions of the key, desk-scale vocabularies)
_HASH_CACHE: dict[tuple[str, int], tuple[int, float]] = {}


def _hash_feature(feature: str, dims: int) -> tuple[int, float]:
    key = (feature, dims)
    hit = _HASH_CACHE.get(key)
    if hit is None:
        digest = hashlib.blake2b(feature.encode("utf-8"),
                                 digest_size=8).digest()
        h = int.from_bytes(digest, "little")
        hit = (h % dims, 1.0 if h & (1 << 63) else -1.0)
        _HASH_CACHE[key] = hit
    return hit


class HashingEmbedder:
    """Deterministic signed feature-hashing embedder (unigrams + bigrams)."""

    def __init__(self, dims: int = 4096):
        if dims < 1:
            raise ValueError("dims must be >= 1")
        self.dims = dims

    @property
    def embedder_id(self) -> str:
        return f"hash-uni+bi-{self.dims}"

    def features(self, text: str) -> list[str]:
        toks = index_tokens(text)
        return toks + [f"{a} {b}" for a, b in zip(toks, toks[1:])]

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise EmptyText("cannot embed a blank string")
        feats = self.features(text)
        if not feats:
            raise EmptyText("no hashable tokens in text")
        vec = np.zeros(self.dims, dtype=np.float64)
        for f in feats:
            idx, sign = _hash_feature(f, self.dims)
            vec[idx] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # opposite-signed collisions cancelled everything; keep unit norm
            vec[_hash_feature(feats[0], self.dims)[0]] = 1.0
            return vec
        return vec / norm


@dataclass(frozen=True)
class RankedChunks:
    entries: tuple[tuple[str, float], ...]
    query_digest: str


class DenseIndex:
    """Exact inner-product index over chunk vectors.

    Build is single-writer; ``freeze()`` stacks the vectors into one matrix,
    after which the index is immutable and safe for concurrent queries.
    Ranking ties break on ascending chunk id.
    """

    def __init__(self, dims: int, embedder_id: str = ""):
        if dims < 1:
            raise ValueError("dims must be >= 1")
        self.dims = dims
        self.embedder_id = embedder_id
        self._ids: list[str] = []
        self._rows: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def frozen(self) -> bool:
        return self._matrix is not None

    def add(self, chunk_id: str, vector: Sequence[float]) -> None:
        if self.frozen:
            raise RuntimeError("index is frozen")
        row = np.asarray(vector, dtype=np.float64)
        if row.shape != (self.dims,):
            raise ValueError(f"vector must have shape ({self.dims},)")
        if not np.all(np.isfinite(row)):
            raise ValueError("vector has non-finite values")
        self._ids.append(chunk_id)
        self._rows.append(row)

    def freeze(self) -> "DenseIndex":
        if not self.frozen:
            self._matrix = (np.stack(self._rows) if self._rows
                            else np.zeros((0, self.dims)))
            self._rows = []
        return self

    def top_n(self, query_vec: Sequence[float], n: int = 5) -> RankedChunks:
        if not self.frozen:
            raise RuntimeError("freeze the index before querying")
        if n < 1:
            raise ValueError("n must be >= 1")
        q = np.asarray(query_vec, dtype=np.float64)
        digest = hashlib.sha1(q.astype("<f8").tobytes()).hexdigest()[:12]
        if len(self._ids) == 0:
            return RankedChunks((), digest)
        # per-row dot, not one matmul: blocked BLAS kernels can differ from a
        # row-wise scan by an ulp, which would reorder near-ties vs. the
        # reference brute force this index promises to match
        scores = np.array([np.dot(row, q) for row in self._matrix])
        order = sorted(range(len(self._ids)),
                       key=lambda i: (-scores[i], self._ids[i]))
        top = order[: min(n, len(order))]
        return RankedChunks(
            tuple((self._ids[i], float(scores[i])) for i in top), digest)

    def save(self, path: str | Path) -> None:
        if not self.frozen:
            raise RuntimeError("freeze the index before saving")
        header = json.dumps(
            {"dims": self.dims, "count": len(self._ids),
             "embedder_id": self.embedder_id},
            sort_keys=True).encode("utf-8")
        ids_blob = json.dumps(self._ids).encode("utf-8")
        with Path(path).open("wb") as fh:
            fh.write(INDEX_MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            fh.write(self._matrix.astype("<f4").tobytes(order="C"))
            fh.write(struct.pack("<I", len(ids_blob)))
            fh.write(ids_blob)

    @classmethod
    def load(cls, path: str | Path) -> "DenseIndex":
        with Path(path).open("rb") as fh:
            magic = fh.read(4)
            if magic != INDEX_MAGIC:
                raise ValueError(f"not a dense index file (magic {magic!r})")
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen).decode("utf-8"))
            dims, count = header["dims"], header["count"]
            block = fh.read(4 * dims * count)
            matrix = np.frombuffer(block, dtype="<f4").reshape(count, dims)
            (ilen,) = struct.unpack("<I", fh.read(4))
            ids = json.loads(fh.read(ilen).decode("utf-8"))
        if len(ids) != count:
            raise ValueError("chunk id table disagrees with header count")
        index = cls(dims, header.get("embedder_id", ""))
        index._ids = list(ids)
        index._matrix = matrix.astype(np.float64)
        return index


def retrieval_distribution(scores: Sequence[float],
                           temperature: float = 1.0) -> np.ndarray:
    """Softmax over retrieval scores; the document prior for marginalization."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise NoDocuments("at least one retrieval score is required")
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    z = arr / temperature
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()
