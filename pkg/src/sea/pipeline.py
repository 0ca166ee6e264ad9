"""End-to-end wizard turns: query -> retrieve -> assemble -> decode.

Retrieval failures never abort a turn; the stage degrades to a context-only
input and the trace says so. With local components and a fixed seed the
whole pipeline is deterministic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from .corpus import Document, DocumentStore, chunk_document
from .decoding import GenerationParams, beam_search, make_rag_step
from .dense import DenseIndex, HashingEmbedder, retrieval_distribution
from .dialogue import WIZARD, DialogueContext
from .errors import EmptyContext, EngineUnavailable, GeneratorUnavailable
from .fusion import FiDInput, assemble_fid_contexts
from .metrics import MetricReport, knowledge_f1, perplexity, unigram_f1
from .search import dual_news_search

RETRIEVAL_MODES = ("none", "dense_context", "dense_query", "engine")

Responder = Callable[[DialogueContext, "object"], str]


@dataclass(frozen=True)
class PipelineConfig:
    retrieval_mode: str = "engine"
    engine_id: str = "local-bm25-document"
    n_docs: int = 5
    generation: GenerationParams = GenerationParams()
    mix_rho: float = 0.0
    augment_news: bool = False
    rag_token: bool = False
    prior_temperature: float = 1.0  # retrieval prior temperature for rag_token

    def __post_init__(self):
        if self.retrieval_mode not in RETRIEVAL_MODES:
            raise ValueError(f"unknown retrieval_mode: {self.retrieval_mode!r}")
        if self.n_docs < 1:
            raise ValueError("n_docs must be >= 1")
        if not 0.0 <= self.mix_rho <= 1.0:
            raise ValueError("mix_rho must be in [0, 1]")

    def as_dict(self) -> dict:
        return {
            "retrieval_mode": self.retrieval_mode,
            "engine_id": self.engine_id,
            "n_docs": self.n_docs,
            "generation": self.generation.as_dict(),
            "mix_rho": self.mix_rho,
            "augment_news": self.augment_news,
            "rag_token": self.rag_token,
            "prior_temperature": self.prior_temperature,
        }


@dataclass
class TurnTrace:
    context_digest: str
    generated_query: Optional[str] = None
    engine_results: tuple[str, ...] = ()
    assembled_mode: str = "no_knowledge"
    response: str = ""
    timing: dict = field(default_factory=dict)
    degraded: bool = False
    retrieved: tuple[Document, ...] = ()

    def as_dict(self, include_timing: bool = True) -> dict:
        out = {
            "context_digest": self.context_digest,
            "generated_query": self.generated_query,
            "engine_results": list(self.engine_results),
            "assembled_mode": self.assembled_mode,
            "response": self.response,
            "degraded": self.degraded,
        }
        if include_timing:
            out["timing"] = dict(self.timing)
        return out


def build_dense_index(store: DocumentStore, embedder: HashingEmbedder,
                      chunk_size: int = 100) -> tuple[DenseIndex, dict]:
    """Embed every chunk of every document; returns the index and a chunk map."""
    index = DenseIndex(embedder.dims, embedder.embedder_id)
    chunk_map: dict[str, tuple[Document, str]] = {}
    for doc in store:
        for chunk in chunk_document(doc, chunk_size):
            if not chunk.text.strip():
                continue
            index.add(chunk.chunk_id, embedder.embed(chunk.text))
            chunk_map[chunk.chunk_id] = (doc, chunk.text)
    return index.freeze(), chunk_map


class Pipeline:
    """Wires one configuration of components into a runnable wizard."""

    def __init__(self, config: PipelineConfig, *, store: DocumentStore,
                 lm=None, engine=None, query_generator=None,
                 dense_index: Optional[DenseIndex] = None,
                 embedder: Optional[HashingEmbedder] = None,
                 chunk_map: Optional[dict] = None):
        mode = config.retrieval_mode
        if mode == "engine" and engine is None:
            raise ValueError("engine mode needs a search engine")
        if mode in ("dense_context", "dense_query"):
            if dense_index is None or embedder is None:
                raise ValueError(f"{mode} mode needs a dense index and embedder")
        if mode in ("dense_query", "engine") and query_generator is None:
            raise ValueError(f"{mode} mode needs a query generator")
        self.config = config
        self.store = store
        self.lm = lm
        self.engine = engine
        self.query_generator = query_generator
        self.dense_index = dense_index
        self.embedder = embedder
        self.chunk_map = chunk_map or {}

    # -- retrieval ---------------------------------------------------------

    def _chunk_doc(self, chunk_id: str) -> Optional[Document]:
        hit = self.chunk_map.get(chunk_id)
        if hit is not None:
            doc, text = hit
        else:
            # ids are "<url>#w<ordinal>"; rebuild the window from the store
            url, _, tag = chunk_id.rpartition("#w")
            parent = self.store.lookup_by_url(url)
            if parent is None or not tag.isdigit():
                return None
            chunks = chunk_document(parent)
            ordinal = int(tag)
            if ordinal >= len(chunks):
                return None
            doc, text = parent, chunks[ordinal].text
        return Document(url=chunk_id, title=doc.title, content=text,
                        source=doc.source)

    def _retrieve(self, ctx: DialogueContext, trace: TurnTrace
                  ) -> tuple[list[Document], list[float], str]:
        """Documents for this turn, their scores, and the assembly kind."""
        cfg = self.config
        if cfg.retrieval_mode == "none":
            return [], [], "search"
        if cfg.retrieval_mode == "engine":
            query = self.query_generator.generate(ctx)
            trace.generated_query = query.text
            query = replace(query, augment_news=cfg.augment_news)
            results = dual_news_search(self.engine, query, cfg.n_docs)
            docs = list(results.results)
            return docs, [0.0] * len(docs), "search"
        # dense modes
        if cfg.retrieval_mode == "dense_query":
            query = self.query_generator.generate(ctx)
            trace.generated_query = query.text
            vec = self.embedder.embed(query.text)
        else:
            vec = self.embedder.embed(ctx.flatten())
        ranked = self.dense_index.top_n(vec, cfg.n_docs)
        docs, scores = [], []
        for chunk_id, score in ranked.entries:
            doc = self._chunk_doc(chunk_id)
            if doc is not None:
                docs.append(doc)
                scores.append(score)
        return docs, scores, "dense"

    def assemble(self, ctx: DialogueContext, trace: Optional[TurnTrace] = None
                 ) -> tuple[FiDInput, list[float]]:
        """Retrieve and assemble, degrading to context-only on engine failure."""
        trace = trace if trace is not None else TurnTrace(ctx.digest())
        try:
            docs, scores, kind = self._retrieve(ctx, trace)
        except (EngineUnavailable, GeneratorUnavailable, EmptyContext):
            trace.degraded = True
            docs, scores, kind = [], [], "search"
        trace.engine_results = tuple(d.url for d in docs)
        trace.retrieved = tuple(docs)
        fid = assemble_fid_contexts(ctx, docs, kind, self.config.n_docs)
        trace.assembled_mode = fid.mode
        return fid, scores

    # -- generation --------------------------------------------------------

    def decode(self, fid: FiDInput, scores: Sequence[float]) -> str:
        if self.lm is None:
            raise ValueError("decoding needs a language model")
        lm = self.lm
        if self.config.rag_token and len(fid.segments) > 1:
            priors = retrieval_distribution(
                scores if any(scores) else [0.0] * len(fid.segments),
                self.config.prior_temperature)
            steps = [
                (lambda prefix, seg=seg: lm.next_dist(seg, prefix))
                for seg in fid.segments
            ]
            step = make_rag_step(steps, [float(p) for p in priors])
        else:
            conditioning = fid.conditioning()
            step = lambda prefix: lm.next_dist(conditioning, prefix)
        tokens = beam_search(step, self.config.generation, lm.eos_id)
        return lm.tokens_to_text(tokens)

    def run_wizard_turn(self, ctx: DialogueContext) -> tuple[str, TurnTrace]:
        trace = TurnTrace(ctx.digest())
        t0 = time.perf_counter()
        fid, scores = self.assemble(ctx, trace)
        t1 = time.perf_counter()
        response = self.decode(fid, scores)
        t2 = time.perf_counter()
        trace.response = response
        trace.timing = {"retrieve_s": t1 - t0, "decode_s": t2 - t1}
        return response, trace

    # -- evaluation --------------------------------------------------------

    def _evaluate_dialogue(self, dialogue, responder: Optional[Responder]
                           ) -> tuple[list[float], list[float],
                                      list[tuple[str, str]]]:
        f1_vals: list[float] = []
        kf1_vals: list[float] = []
        ppl_examples: list[tuple[str, str]] = []
        ctx = DialogueContext(persona=dialogue.apprentice_persona)
        for turn in dialogue.turns:
            if turn.speaker == WIZARD and ctx.turns:
                fid, scores = self.assemble(ctx)
                if responder is not None:
                    response = responder(ctx, turn)
                else:
                    response = self.decode(fid, scores)
                f1_vals.append(unigram_f1(response, turn.text))
                kf1_vals.append(knowledge_f1(response, turn.selected))
                if self.lm is not None:
                    ppl_examples.append((fid.conditioning(), turn.text))
            ctx = ctx.with_turn(turn.speaker, turn.text)
        return f1_vals, kf1_vals, ppl_examples

    def evaluate(self, dialogues, responder: Optional[Responder] = None,
                 workers: int = 1) -> MetricReport:
        """Score generated responses for every wizard turn with history.

        F1 is measured against the gold response, KF1 against the selected
        sentences (0 when there are none, still counted). Perplexity of the
        gold responses is computed under the same assembled conditioning
        when a language model is present. ``responder`` overrides the decode
        stage, for oracle generators. Dialogues are independent, so they can
        be scored on ``workers`` threads; results combine in input order, so
        the report does not depend on the worker count.
        """
        if workers > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_dialogue = list(pool.map(
                    lambda d: self._evaluate_dialogue(d, responder),
                    dialogues))
        else:
            per_dialogue = [self._evaluate_dialogue(d, responder)
                            for d in dialogues]
        f1_vals = [v for f1s, _, _ in per_dialogue for v in f1s]
        kf1_vals = [v for _, kf1s, _ in per_dialogue for v in kf1s]
        ppl_examples = [e for _, _, examples in per_dialogue for e in examples]
        n = len(f1_vals)
        ppl = (perplexity(self.lm, ppl_examples)
               if self.lm is not None and ppl_examples else None)
        return MetricReport(
            f1=sum(f1_vals) / n if n else 0.0,
            kf1=sum(kf1_vals) / n if n else 0.0,
            n_examples=n,
            ppl=ppl,
        )
