"""Constrained beam search and decode-time mixture over retrieved documents.

Beam blocking masks any continuation that would repeat an n-gram *within the
generated response*; n-grams of the conditioning text are never blocked.
The end token is masked until the minimum length is reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, NoDocuments, NoValidContinuation

LmStep = Callable[[tuple[int, ...]], np.ndarray]


@dataclass(frozen=True)
class GenerationParams:
    beam_size: int = 3
    min_len: int = 20
    block_ngram: int = 3  # 0 disables
    max_len: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.min_len < 0 or self.block_ngram < 0:
            raise ValueError("min_len and block_ngram must be >= 0")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.min_len > self.max_len:
            raise ValueError("min_len cannot exceed max_len")

    def as_dict(self) -> dict:
        return {"beam_size": self.beam_size, "min_len": self.min_len,
                "block_ngram": self.block_ngram, "max_len": self.max_len,
                "seed": self.seed}


def _blocked_tokens(generated: tuple[int, ...], n: int) -> set[int]:
    """Token ids whose emission would repeat an n-gram of ``generated``."""
    if n == 0 or len(generated) < n - 1:
        return set()
    prefix = generated[len(generated) - (n - 1):] if n > 1 else ()
    blocked = set()
    for i in range(len(generated) - n + 1):
        if tuple(generated[i : i + n - 1]) == prefix:
            blocked.add(generated[i + n - 1])
    return blocked


def beam_search(lm_step: LmStep, params: GenerationParams, eos_id: int) -> list[int]:
    """Highest-scoring finished hypothesis under length and n-gram masks.

    Scores are sums of token log-probabilities without length normalization.
    Ties break on (higher logprob, lower token id, lower beam index), which
    makes the search bit-reproducible; ``beam_size=1`` is a greedy rollout.
    Returns the generated tokens without the end token.
    """
    beams: list[tuple[float, tuple[int, ...]]] = [(0.0, ())]
    finished: list[tuple[float, tuple[int, ...]]] = []
    for _ in range(params.max_len + 1):
        if not beams:
            break
        candidates: list[tuple[float, int, int, tuple[int, ...]]] = []
        for beam_idx, (score, toks) in enumerate(beams):
            dist = np.asarray(lm_step(toks), dtype=np.float64)
            blocked = _blocked_tokens(toks, params.block_ngram)
            at_cap = len(toks) >= params.max_len
            for tid in range(len(dist)):
                if tid == eos_id:
                    if len(toks) < params.min_len:
                        continue
                elif at_cap or tid in blocked:
                    continue
                p = float(dist[tid])
                if p <= 0.0:
                    continue
                candidates.append((score + math.log(p), tid, beam_idx, toks))
        if not candidates:
            if finished:
                break
            raise NoValidContinuation(
                "all continuations are blocked before min_len is reached")
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        next_beams = []
        for cand_score, tid, _, toks in candidates[: params.beam_size]:
            if tid == eos_id:
                finished.append((cand_score, toks))
            else:
                next_beams.append((cand_score, toks + (tid,)))
        beams = next_beams
    if not finished:
        raise NoValidContinuation("no hypothesis reached the end token")
    best = min(finished, key=lambda h: (-h[0], h[1]))
    return list(best[1])


def rag_token_dist(doc_steps: Sequence[LmStep], priors: Sequence[float],
                   prefix: tuple[int, ...]) -> np.ndarray:
    """Next-token distribution marginalized over per-document conditionings.

    Each element of ``doc_steps`` is a language model already conditioned on
    one retrieved document; the result is the prior-weighted sum of their
    next-token distributions.
    """
    if len(doc_steps) != len(priors):
        raise DimensionMismatch(
            f"{len(doc_steps)} document models vs {len(priors)} priors")
    if not doc_steps:
        raise NoDocuments("marginalization needs at least one document")
    dists = [np.asarray(step(prefix), dtype=np.float64) for step in doc_steps]
    width = dists[0].shape[0]
    if any(d.shape != (width,) for d in dists):
        raise DimensionMismatch("document models disagree on vocabulary size")
    mix = np.zeros(width, dtype=np.float64)
    for p, d in zip(priors, dists):
        mix += float(p) * d
    return mix


def make_rag_step(doc_steps: Sequence[LmStep], priors: Sequence[float]) -> LmStep:
    """Bind document models and priors into a single decoding step."""
    def step(prefix: tuple[int, ...]) -> np.ndarray:
        return rag_token_dist(doc_steps, priors, prefix)
    return step
