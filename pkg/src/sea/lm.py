"""Pluggable next-token distributions and a count-based n-gram model.

Anything with ``vocab``, ``eos_id``, ``token_ids`` and ``next_dist`` can
drive decoding and perplexity; the n-gram model here is the native toy
backend for end-to-end runs. Tokens are whitespace words.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import EmptyCorpus
from .text import words

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


@runtime_checkable
class TokenLM(Protocol):
    vocab: list[str]
    bos_id: int
    eos_id: int
    unk_id: int

    def token_ids(self, text: str) -> list[int]: ...

    def next_dist(self, conditioning: str, prefix: Sequence[int]) -> np.ndarray: ...


class NgramLM:
    """Add-k smoothed n-gram model with backoff to shorter contexts.

    Counts are kept for every context length up to ``order - 1``; an unseen
    context backs off to the next shorter one, bottoming out at the unigram
    distribution. Smoothing keeps every distribution strictly positive.
    """

    def __init__(self, texts: Sequence[str], order: int = 3, k: float = 0.1):
        if order < 1:
            raise ValueError("order must be >= 1")
        if k <= 0:
            raise ValueError("smoothing constant k must be > 0")
        token_lists = [words(t) for t in texts]
        seen = sorted({tok for toks in token_lists for tok in toks})
        if not seen:
            raise EmptyCorpus("no tokens in the training texts")
        self.order = order
        self.k = k
        self.vocab: list[str] = [BOS, EOS, UNK] + seen
        self._ids = {tok: i for i, tok in enumerate(self.vocab)}
        self.bos_id, self.eos_id, self.unk_id = 0, 1, 2
        # counts[m]: context tuple of length m -> Counter of next-token ids
        self._counts: list[dict[tuple[int, ...], Counter]] = [
            defaultdict(Counter) for _ in range(order)
        ]
        for toks in token_lists:
            ids = [self.bos_id] * (order - 1) + [self._ids[t] for t in toks] + [self.eos_id]
            for pos in range(order - 1, len(ids)):
                for m in range(order):
                    ctx = tuple(ids[pos - m : pos])
                    self._counts[m][ctx][ids[pos]] += 1
        self._dist_cache: dict[tuple[int, ...], np.ndarray] = {}

    def token_ids(self, text: str) -> list[int]:
        return [self._ids.get(t, self.unk_id) for t in words(text)]

    def tokens_to_text(self, ids: Sequence[int]) -> str:
        return " ".join(self.vocab[i] for i in ids)

    def next_dist(self, conditioning: str, prefix: Sequence[int]) -> np.ndarray:
        history = (
            [self.bos_id] * (self.order - 1)
            + self.token_ids(conditioning)
            + list(prefix)
        )
        for m in range(self.order - 1, -1, -1):
            ctx = tuple(history[len(history) - m :]) if m else ()
            counter = self._counts[m].get(ctx)
            if counter is not None:
                break
        # m == 0 always hits: unigram counts exist for any non-empty corpus
        cached = self._dist_cache.get(ctx)
        if cached is not None:
            return cached
        counts = np.zeros(len(self.vocab), dtype=np.float64)
        for tid, c in counter.items():
            counts[tid] = c
        dist = (counts + self.k) / (counts.sum() + self.k * len(self.vocab))
        self._dist_cache[ctx] = dist
        return dist


def train_ngram_lm(texts: Sequence[str], order: int = 3, k: float = 0.1) -> NgramLM:
    return NgramLM(texts, order=order, k=k)
