"""Grounded context assembly for fusion-in-decoder style generation.

Each segment pairs one retrieved document with the flattened dialogue
context; a neural backend would encode segments separately, the toy backend
conditions on their concatenation. Segment structure is preserved either
way.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

from .corpus import Document
from .dialogue import DialogueContext, WIZARD
from .text import words

if TYPE_CHECKING:
    from .dataset import Turn

FID = "fid"
FID_GOLD = "fid_gold"
NO_KNOWLEDGE = "no_knowledge"

# word budget of the document part of a segment
DENSE_BUDGET = 100   # dense retrieval hands over one 100-word chunk
SEARCH_BUDGET = 256  # search results are truncated to their first 256 tokens

SEGMENT_SEP = "\n"


@dataclass(frozen=True)
class FiDInput:
    segments: tuple[str, ...]
    mode: str

    def conditioning(self) -> str:
        return "\n\n".join(self.segments)


def assemble_fid_contexts(ctx: DialogueContext, docs: Sequence[Document],
                          source_kind: str, n: int = 5) -> FiDInput:
    """One segment per retrieved document, rank order preserved.

    ``source_kind`` picks the document budget: dense retrieval supplies
    100-word chunks, search results keep their first 256 tokens. With no
    documents the input degrades to a single context-only segment.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if source_kind not in ("dense", "search"):
        raise ValueError(f"unknown source_kind: {source_kind!r}")
    flat = ctx.flatten()
    take = list(docs[:n])
    if not take:
        return FiDInput((flat,), NO_KNOWLEDGE)
    budget = DENSE_BUDGET if source_kind == "dense" else SEARCH_BUDGET
    segments = tuple(
        " ".join(words(doc.content)[:budget]) + SEGMENT_SEP + flat
        for doc in take
    )
    return FiDInput(segments, FID)


def assemble_gold_contexts(ctx: DialogueContext, turn: "Turn", mode: str,
                           *, query_generator=None, engine=None, n: int = 5,
                           counters: Optional[Counter] = None) -> FiDInput:
    """Training contexts for a wizard turn from the dataset.

    ``fid`` re-runs the pipeline's query generator against the engine;
    ``fid_gold`` copies the human query's recorded results (the last search
    of the turn). A gold request on a turn without searches degrades to
    no_knowledge, bumping ``counters["no_recorded_search"]`` when a counter
    is supplied.
    """
    if turn.speaker != WIZARD:
        raise ValueError("gold contexts are defined for wizard turns only")
    if mode == FID:
        if query_generator is None or engine is None:
            raise ValueError("fid mode needs a query generator and an engine")
        query = query_generator.generate(ctx)
        results = engine.search(query, n)
        return assemble_fid_contexts(ctx, results.results, "search", n)
    if mode == FID_GOLD:
        if not turn.searches:
            if counters is not None:
                counters["no_recorded_search"] += 1
            return assemble_fid_contexts(ctx, (), "search", n)
        docs = turn.searches[-1].results
        assembled = assemble_fid_contexts(ctx, docs, "search", n)
        return FiDInput(assembled.segments, FID_GOLD)
    raise ValueError(f"unknown mode: {mode!r}")
