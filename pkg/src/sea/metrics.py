"""Automatic response metrics: unigram F1, knowledge F1 and perplexity.

F1 uses multiset (not set) token overlap, which is the common convention in
dialogue evaluation but does change values; reported numbers are scaled by
100 in tables to match the usual presentation.
"""

from __future__ import annotations

import json
import string
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyTargets

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_tokens(text: str) -> list[str]:
    """Lowercase, drop punctuation characters, split on whitespace."""
    return text.lower().translate(_PUNCT_TABLE).split()


def unigram_f1(prediction: str, reference: str) -> float:
    """Bag-of-tokens F1 counting multiplicity; 0 when either side is empty."""
    pred = Counter(normalize_tokens(prediction))
    ref = Counter(normalize_tokens(reference))
    overlap = sum((pred & ref).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(pred.values())
    recall = overlap / sum(ref.values())
    return 2 * precision * recall / (precision + recall)


def knowledge_f1(prediction: str, selected: Sequence) -> float:
    """F1 against the concatenated wizard-selected sentences; 0 when none.

    ``selected`` may hold plain strings or records with a ``sentence`` field.
    """
    sentences = [getattr(s, "sentence", s) for s in selected]
    if not sentences:
        return 0.0
    return unigram_f1(prediction, " ".join(sentences))


def perplexity(lm, examples: Sequence[tuple[str, str]]) -> float:
    """Corpus-level perplexity of targets under ``lm``, micro-averaged.

    Each example is (conditioning, target); the end-of-sequence token is
    scored for every target. Log-probabilities accumulate at extended
    precision so degenerate cases (a uniform model) reproduce the vocabulary
    size without round-off.
    """
    total_logp = np.longdouble(0.0)
    total_tokens = 0
    for conditioning, target in examples:
        ids = lm.token_ids(target) + [lm.eos_id]
        prefix: list[int] = []
        for tid in ids:
            dist = lm.next_dist(conditioning, prefix)
            total_logp += np.log(np.longdouble(float(dist[tid])))
            prefix.append(tid)
        total_tokens += len(ids)
    if total_tokens == 0:
        raise EmptyTargets("no target tokens to score")
    return float(np.exp(-total_logp / total_tokens))


@dataclass(frozen=True)
class MetricReport:
    f1: float
    kf1: float
    n_examples: int
    ppl: Optional[float] = None

    def as_dict(self) -> dict:
        out: dict = {
            "ppl": self.ppl,
            "f1": self.f1,
            "kf1": self.kf1,
            "n_examples": self.n_examples,
        }
        return out

    def as_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    def as_table(self) -> str:
        """Text table in the usual (PPL, F1, KF1) column layout, F1s x100."""
        ppl = f"{self.ppl:.1f}" if self.ppl is not None else "-"
        header = f"{'PPL':>8} {'F1':>8} {'KF1':>8} {'N':>8}"
        row = (f"{ppl:>8} {100 * self.f1:>8.1f} {100 * self.kf1:>8.1f} "
               f"{self.n_examples:>8d}")
        return header + "\n" + row
