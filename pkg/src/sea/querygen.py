"""Search-query generation from dialogue context, plus downstream metrics.

The generator is a pluggable contract. Two implementations ship: a
deterministic extractive tf-idf baseline (no trained weights) and a thin
client for an external inference endpoint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Protocol, Sequence, Union

import httpx

from .corpus import DocumentStore
from .dialogue import DialogueContext
from .errors import EmptyContext, GeneratorUnavailable
from .metrics import unigram_f1
from .search import SearchQuery
from .text import index_tokens, words

# fixed function-word list; terms on it never become query terms
STOPWORDS = frozenset("""
a about after again against all am an and any are as at be because been
before being below between both but by can could did do does doing down
during each few for from further had has have having he her here hers
herself him himself his how i if in into is it its itself just me more most
my myself no nor not of off on once only or other our ours ourselves out
over own s same she should so some such t than that the their theirs them
themselves then there these they this those through to too under until up
very was we were what when where which while who whom why will with would
you your yours yourself yourselves
""".split())


class QueryGenerator(Protocol):
    def generate(self, ctx: DialogueContext) -> SearchQuery: ...


@dataclass(frozen=True)
class CorpusStats:
    """Document frequencies used to weight candidate query terms."""

    n_docs: int
    df: Mapping[str, int]

    @classmethod
    def from_store(cls, store: DocumentStore) -> "CorpusStats":
        df: dict[str, int] = {}
        for doc in store:
            for term in set(index_tokens(doc.title + " " + doc.content)):
                df[term] = df.get(term, 0) + 1
        return cls(n_docs=len(store), df=df)

    def idf(self, term: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.df.get(term, 0))) + 1.0


class ExtractiveQueryBaseline:
    """Deterministic tf-idf term extraction standing in for a trained model.

    Candidate terms come from the last two turns and the persona; the top
    ``max_terms`` by tf*idf are emitted in their original surface order.
    When everything is a stopword the last turn is used verbatim, truncated
    to ``max_terms`` words.
    """

    def __init__(self, corpus_stats: CorpusStats, max_terms: int = 4):
        if max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        self.stats = corpus_stats
        self.max_terms = max_terms

    def generate(self, ctx: DialogueContext) -> SearchQuery:
        if not ctx.turns:
            raise EmptyContext("query generation needs at least one turn")
        pieces = ctx.last_texts(2) + list(ctx.persona)
        tokens: list[str] = []
        for piece in pieces:
            tokens.extend(index_tokens(piece))
        first_pos: dict[str, int] = {}
        counts: dict[str, int] = {}
        for pos, tok in enumerate(tokens):
            if tok in STOPWORDS:
                continue
            first_pos.setdefault(tok, pos)
            counts[tok] = counts.get(tok, 0) + 1
        if not counts:
            fallback = " ".join(words(ctx.turns[-1][1])[: self.max_terms])
            return SearchQuery(fallback if fallback else ctx.turns[-1][1])
        scored = sorted(
            counts,
            key=lambda t: (-counts[t] * self.stats.idf(t), first_pos[t]),
        )[: self.max_terms]
        chosen = sorted(scored, key=lambda t: first_pos[t])
        return SearchQuery(" ".join(chosen))


class RemoteQueryGenerator:
    """Client for an external query-generation inference endpoint."""

    def __init__(self, endpoint: str, timeout: float = 10.0,
                 transport: Optional[httpx.BaseTransport] = None):
        self.endpoint = endpoint
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def generate(self, ctx: DialogueContext) -> SearchQuery:
        if not ctx.turns:
            raise EmptyContext("query generation needs at least one turn")
        payload = {"persona": list(ctx.persona),
                   "turns": [[s, t] for s, t in ctx.turns]}
        try:
            resp = self._client.post(self.endpoint, json=payload)
        except httpx.HTTPError as exc:
            raise GeneratorUnavailable(f"request failed: {exc}") from exc
        if resp.status_code != 200:
            raise GeneratorUnavailable(f"endpoint returned HTTP {resp.status_code}")
        query = resp.json().get("query", "").strip()
        if not query:
            raise GeneratorUnavailable("endpoint returned an empty query")
        return SearchQuery(query)

    def close(self) -> None:
        self._client.close()


def generate_query(generator: QueryGenerator, ctx: DialogueContext) -> SearchQuery:
    return generator.generate(ctx)


@dataclass(frozen=True)
class QueryEvalSets:
    """One wizard search scored against a generated ranking.

    ``gold_retrieved`` (R) are the results of the human query;
    ``selected`` (D) the documents the wizard used, not necessarily inside R;
    ``generated`` (S) the ranked results of the generated query.
    """

    gold_retrieved: frozenset[str]
    selected: frozenset[str]
    generated: tuple[str, ...]


@dataclass(frozen=True)
class QueryEvalCase:
    """Dataset-side half of a query evaluation: everything but S."""

    context: DialogueContext
    gold_query: str
    gold_retrieved: tuple[str, ...]
    selected: tuple[str, ...]


def extract_query_cases(dialogues) -> list[QueryEvalCase]:
    """One case per searching wizard turn.

    R is the result list of the turn's last search (the human query kept by
    the pair extractor); D is the set of URLs the wizard selected from.
    """
    cases = []
    for d in dialogues:
        turns_so_far: list[tuple[str, str]] = []
        for turn in d.turns:
            if turn.speaker == "wizard" and turn.searches:
                search = turn.searches[-1]
                cases.append(QueryEvalCase(
                    context=DialogueContext(d.apprentice_persona,
                                            tuple(turns_so_far)),
                    gold_query=search.query,
                    gold_retrieved=tuple(r.url for r in search.results),
                    selected=tuple(s.doc_url for s in turn.selected),
                ))
            turns_so_far.append((turn.speaker, turn.text))
    return cases


def save_query_cases(cases: Sequence[QueryEvalCase], path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for case in cases:
            record = {
                "context": {"persona": list(case.context.persona),
                            "turns": [[s, t] for s, t in case.context.turns]},
                "gold_query": case.gold_query,
                "R": list(case.gold_retrieved),
                "D": list(case.selected),
            }
            fh.write(json.dumps(record, ensure_ascii=False,
                                separators=(",", ":")) + "\n")


def load_query_cases(path) -> list[QueryEvalCase]:
    cases = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            cases.append(QueryEvalCase(
                context=DialogueContext(
                    tuple(rec["context"]["persona"]),
                    tuple((s, t) for s, t in rec["context"]["turns"])),
                gold_query=rec["gold_query"],
                gold_retrieved=tuple(rec["R"]),
                selected=tuple(rec["D"]),
            ))
    return cases


def evaluate_generator(cases: Sequence[QueryEvalCase],
                       generator: QueryGenerator, engine, k: int = 5,
                       doc_text=None) -> dict[str, float]:
    """Run the generator against the engine and score S against R and D.

    Cases whose context the generator cannot condition on (a wizard opening
    with no prior turns) are skipped, like cases with an empty R.
    """
    eval_sets = []
    for case in cases:
        try:
            query = generator.generate(case.context)
        except EmptyContext:
            continue
        urls = tuple(engine.search(query, k).urls())
        eval_sets.append(QueryEvalSets(frozenset(case.gold_retrieved),
                                       frozenset(case.selected), urls))
    return query_metrics(eval_sets, k=k, doc_text=doc_text)


def query_metrics(cases: Sequence[QueryEvalSets], k: int = 5,
                  doc_text: Union[Mapping[str, str], Callable[[str], str], None] = None,
                  ) -> dict[str, float]:
    """Downstream quality of generated queries against the human gold search.

    Returns ``pct_in_top_k`` (percent of R present in S, averaged over
    cases), ``avg_f1`` (per generated doc, best text F1 against any gold
    doc; percent) and ``gold_recall_at_k`` (fraction of cases where any
    selected doc appears in S). Cases with empty R are excluded from the
    first two. Document text defaults to the URL itself when no resolver is
    given; pipelines pass title + leading content.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if callable(doc_text):
        resolve = doc_text
    elif doc_text is not None:
        mapping = doc_text
        resolve = lambda url: mapping.get(url, url)
    else:
        resolve = lambda url: url
    pct_vals: list[float] = []
    f1_vals: list[float] = []
    recall_hits = 0
    for case in cases:
        if len(case.generated) > k:
            raise ValueError(f"|S| must be <= {k}, got {len(case.generated)}")
        in_s = set(case.generated)
        if case.selected & in_s:
            recall_hits += 1
        if not case.gold_retrieved:
            continue  # undefined denominators: skip for pct and avg F1
        present = sum(1 for r in case.gold_retrieved if r in in_s)
        pct_vals.append(100.0 * present / len(case.gold_retrieved))
        if case.generated:
            gold_texts = [resolve(r) for r in case.gold_retrieved]
            per_s = [
                max(unigram_f1(resolve(s), gt) for gt in gold_texts)
                for s in case.generated
            ]
            f1_vals.append(sum(per_s) / len(per_s))
    # plain sums, not statistics.fmean: these averages are pinned to the
    # arithmetic any straightforward reimplementation produces
    return {
        "pct_in_top_k": sum(pct_vals) / len(pct_vals) if pct_vals else 0.0,
        "avg_f1": 100.0 * sum(f1_vals) / len(f1_vals) if f1_vals else 0.0,
        "gold_recall_at_k": recall_hits / len(cases) if cases else 0.0,
    }
