"""Wizard-of-the-Internet dataset: schema, IO, statistics and training pairs.

On disk a dataset is JSON Lines, one dialogue per line, canonical key order:

    {"id", "persona": [...], "turns": [{"speaker", "text",
        "searches": [{"query", "results": [{"url", "title", "content"}]}],
        "selected": [{"doc_url", "sentence"}]}]}

``save_dataset(load_dataset(path), ...)`` reproduces such a file byte for
byte.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Iterable, Optional, Sequence

from .corpus import Document, host_of
from .dialogue import APPRENTICE, WIZARD, DialogueContext
from .errors import ParseError, SchemaViolation
from .fusion import FiDInput, assemble_fid_contexts
from .text import words


@dataclass(frozen=True)
class SearchAction:
    query: str
    results: tuple[Document, ...]


@dataclass(frozen=True)
class SelectedSentence:
    doc_url: str
    sentence: str


@dataclass(frozen=True)
class Turn:
    speaker: str
    text: str
    searches: tuple[SearchAction, ...] = ()
    selected: tuple[SelectedSentence, ...] = ()


@dataclass(frozen=True)
class WizardDialogue:
    id: str
    apprentice_persona: tuple[str, ...]
    turns: tuple[Turn, ...]


def _require(condition: bool, line: int, field: str, message: str) -> None:
    if not condition:
        raise SchemaViolation(line, field, message)


def _parse_turn(raw: dict, line: int) -> Turn:
    _require(isinstance(raw, dict) and set(raw) == {"speaker", "text",
                                                    "searches", "selected"},
             line, "turns", "turn keys must be exactly "
             "{speaker, text, searches, selected}")
    speaker = raw["speaker"]
    _require(speaker in (WIZARD, APPRENTICE), line, "speaker",
             f"unknown speaker {speaker!r}")
    _require(isinstance(raw["text"], str), line, "text", "must be a string")
    searches = []
    _require(isinstance(raw["searches"], list), line, "searches",
             "must be a list")
    for action in raw["searches"]:
        _require(isinstance(action, dict) and set(action) == {"query", "results"},
                 line, "searches", "search keys must be exactly {query, results}")
        _require(isinstance(action["query"], str) and action["query"].strip() != "",
                 line, "query", "search query must be a non-empty string")
        results = []
        for res in action["results"]:
            _require(isinstance(res, dict) and set(res) == {"url", "title",
                                                            "content"},
                     line, "results",
                     "result keys must be exactly {url, title, content}")
            try:
                # recorded results carry no provenance; treat them as live
                results.append(Document(url=res["url"], title=res["title"],
                                        content=res["content"], source="live"))
            except (ValueError, TypeError) as exc:
                raise SchemaViolation(line, "results", str(exc)) from exc
        searches.append(SearchAction(action["query"], tuple(results)))
    selected = []
    _require(isinstance(raw["selected"], list), line, "selected",
             "must be a list")
    for sel in raw["selected"]:
        _require(isinstance(sel, dict) and set(sel) == {"doc_url", "sentence"},
                 line, "selected",
                 "selection keys must be exactly {doc_url, sentence}")
        _require(isinstance(sel["sentence"], str) and sel["sentence"] != "",
                 line, "sentence", "selected sentence must be non-empty")
        selected.append(SelectedSentence(sel["doc_url"], sel["sentence"]))
    if speaker == APPRENTICE:
        _require(not searches, line, "searches",
                 "apprentice turns cannot carry searches")
        _require(not selected, line, "selected",
                 "apprentice turns cannot carry selections")
    for sel in selected:
        reachable = any(
            res.url == sel.doc_url and sel.sentence in res.content
            for action in searches for res in action.results
        )
        _require(reachable, line, "selected",
                 f"selected sentence not found in this turn's results "
                 f"({sel.doc_url})")
    return Turn(speaker, raw["text"], tuple(searches), tuple(selected))


def _parse_dialogue(raw: dict, line: int) -> WizardDialogue:
    _require(isinstance(raw, dict) and set(raw) == {"id", "persona", "turns"},
             line, "keys", "dialogue keys must be exactly {id, persona, turns}")
    _require(isinstance(raw["id"], str) and raw["id"] != "", line, "id",
             "must be a non-empty string")
    persona = raw["persona"]
    _require(isinstance(persona, list) and persona
             and all(isinstance(p, str) for p in persona),
             line, "persona", "must be a non-empty list of strings")
    _require(isinstance(raw["turns"], list) and len(raw["turns"]) >= 2,
             line, "turns", "a dialogue needs at least 2 turns")
    turns = tuple(_parse_turn(t, line) for t in raw["turns"])
    return WizardDialogue(raw["id"], tuple(persona), turns)


def load_dataset(path: str | Path) -> list[WizardDialogue]:
    """Parse and validate a dataset file; violations carry line numbers."""
    dialogues = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, str(exc)) from exc
            dialogues.append(_parse_dialogue(raw, lineno))
    return dialogues


def dialogue_record(d: WizardDialogue) -> dict:
    return {
        "id": d.id,
        "persona": list(d.apprentice_persona),
        "turns": [
            {
                "speaker": t.speaker,
                "text": t.text,
                "searches": [
                    {"query": a.query,
                     "results": [{"url": r.url, "title": r.title,
                                  "content": r.content} for r in a.results]}
                    for a in t.searches
                ],
                "selected": [{"doc_url": s.doc_url, "sentence": s.sentence}
                             for s in t.selected],
            }
            for t in d.turns
        ],
    }


def dialogue_line(d: WizardDialogue) -> str:
    return json.dumps(dialogue_record(d), ensure_ascii=False,
                      separators=(",", ":"))


def save_dataset(dialogues: Iterable[WizardDialogue], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for d in dialogues:
            fh.write(dialogue_line(d) + "\n")


@dataclass(frozen=True)
class DatasetStats:
    n_dialogues: int
    n_utterances: int
    avg_utterance_len: float
    avg_utterances_per_dialogue: float
    n_searches: int
    n_unique_selected_urls: int
    n_unique_selected_domains: int
    pct_wizard_turns_with_search: float
    avg_queries_per_searching_turn: float
    pct_searching_turns_with_selection: float

    def as_dict(self) -> dict:
        return {
            "n_dialogues": self.n_dialogues,
            "n_utterances": self.n_utterances,
            "avg_utterance_len": self.avg_utterance_len,
            "avg_utterances_per_dialogue": self.avg_utterances_per_dialogue,
            "n_searches": self.n_searches,
            "n_unique_selected_urls": self.n_unique_selected_urls,
            "n_unique_selected_domains": self.n_unique_selected_domains,
            "pct_wizard_turns_with_search": self.pct_wizard_turns_with_search,
            "avg_queries_per_searching_turn": self.avg_queries_per_searching_turn,
            "pct_searching_turns_with_selection":
                self.pct_searching_turns_with_selection,
        }

    def as_table(self) -> str:
        rows = [
            ("Number of Dialogues", f"{self.n_dialogues:,}"),
            ("Number of Utterances", f"{self.n_utterances:,}"),
            ("Average Utterance Length", f"{self.avg_utterance_len:.2f}"),
            ("Average Utterances per Dialogue",
             f"{self.avg_utterances_per_dialogue:.2f}"),
            ("Number of Searches", f"{self.n_searches:,}"),
            ("Number of unique URLs selected",
             f"{self.n_unique_selected_urls:,}"),
            ("Number of unique Domains selected",
             f"{self.n_unique_selected_domains:,}"),
            ("% Wizard Turns with Search",
             f"{self.pct_wizard_turns_with_search:.2f}"),
            ("Queries per Searching Turn",
             f"{self.avg_queries_per_searching_turn:.2f}"),
            ("% Searching Turns with Selection",
             f"{self.pct_searching_turns_with_selection:.2f}"),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value:>10}" for name, value in rows)


def compute_stats(dialogues: Sequence[WizardDialogue]) -> DatasetStats:
    """Dataset-level statistics; empty input reports zeros throughout."""
    utterance_lens: list[int] = []
    n_searches = 0
    selected_urls: set[str] = set()
    wizard_turns = 0
    searching_turns = 0
    searching_with_selection = 0
    for d in dialogues:
        for turn in d.turns:
            utterance_lens.append(len(words(turn.text)))
            n_searches += len(turn.searches)
            for sel in turn.selected:
                selected_urls.add(sel.doc_url)
            if turn.speaker == WIZARD:
                wizard_turns += 1
                if turn.searches:
                    searching_turns += 1
                    if turn.selected:
                        searching_with_selection += 1
    domains = {host_of(u) or u for u in selected_urls}
    n_utts = len(utterance_lens)
    return DatasetStats(
        n_dialogues=len(dialogues),
        n_utterances=n_utts,
        avg_utterance_len=fmean(utterance_lens) if n_utts else 0.0,
        avg_utterances_per_dialogue=n_utts / len(dialogues) if dialogues else 0.0,
        n_searches=n_searches,
        n_unique_selected_urls=len(selected_urls),
        n_unique_selected_domains=len(domains),
        pct_wizard_turns_with_search=(
            100.0 * searching_turns / wizard_turns if wizard_turns else 0.0),
        avg_queries_per_searching_turn=(
            n_searches / searching_turns if searching_turns else 0.0),
        pct_searching_turns_with_selection=(
            100.0 * searching_with_selection / searching_turns
            if searching_turns else 0.0),
    )


@dataclass(frozen=True)
class QueryPair:
    context: DialogueContext
    query: str


@dataclass(frozen=True)
class ResponsePair:
    context: DialogueContext
    response: str
    docs: tuple[Document, ...]
    selected: tuple[SelectedSentence, ...]


def _context_before(d: WizardDialogue, turn_idx: int) -> DialogueContext:
    return DialogueContext(
        persona=d.apprentice_persona,
        turns=tuple((t.speaker, t.text) for t in d.turns[:turn_idx]),
    )


def extract_pairs(dialogues: Sequence[WizardDialogue], kind: str,
                  query_choice: str = "last"):
    """Training pairs for the two supervised tasks.

    ``query_pairs`` yields one (context, query) per searching wizard turn;
    multi-query turns contribute the last query by default (the one that
    satisfied the wizard), or the first, or one pair per query with
    ``query_choice`` in {"last", "first", "all"}. ``response_pairs`` yields
    one (context, response, recorded docs, selections) per wizard turn,
    with docs from the turn's last search.
    """
    if kind not in ("query_pairs", "response_pairs"):
        raise ValueError(f"unknown kind: {kind!r}")
    if query_choice not in ("last", "first", "all"):
        raise ValueError(f"unknown query_choice: {query_choice!r}")
    out: list = []
    for d in dialogues:
        for idx, turn in enumerate(d.turns):
            if turn.speaker != WIZARD:
                continue
            ctx = _context_before(d, idx)
            if kind == "query_pairs":
                if not turn.searches:
                    continue
                if query_choice == "all":
                    out.extend(QueryPair(ctx, a.query) for a in turn.searches)
                else:
                    pick = turn.searches[-1 if query_choice == "last" else 0]
                    out.append(QueryPair(ctx, pick.query))
            else:
                docs = turn.searches[-1].results if turn.searches else ()
                out.append(ResponsePair(ctx, turn.text, tuple(docs),
                                        turn.selected))
    return out


@dataclass(frozen=True)
class TrainingExample:
    fid_input: FiDInput
    target: str
    task: str  # "response" | "knowledge"


def mix_regularized(example: ResponsePair, rho: float, rng: random.Random,
                    fid_input: Optional[FiDInput] = None) -> TrainingExample:
    """Multi-task mixer between response generation and knowledge copying.

    With probability ``rho`` the target becomes the turn's selected
    sentences (click order, space-joined); turns without selections always
    emit the response task. One draw is consumed per call.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must be in [0, 1]")
    if fid_input is None:
        fid_input = assemble_fid_contexts(example.context, example.docs,
                                          "search")
    draw = rng.random()
    if example.selected and draw < rho:
        target = " ".join(s.sentence for s in example.selected)
        return TrainingExample(fid_input, target, "knowledge")
    return TrainingExample(fid_input, example.response, "response")
