"""Session state for the collection and evaluation workbench.

Requests within one session are serialized by a per-session lock; distinct
sessions run concurrently. Every mutation is appended to the session log
when one is configured, and shutdown writes a final snapshot per session.
"""

from __future__ import annotations

import json
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..dataset import (SearchAction, SelectedSentence, Turn, WizardDialogue,
                       dialogue_line)
from ..dialogue import APPRENTICE, WIZARD
from ..text import split_sentences
from . import personas

ATTRIBUTES = ("consistent", "engaging", "knowledgeable", "factually_incorrect")


class SessionError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class SessionMessage:
    speaker: str
    text: str
    searches: list[SearchAction] = field(default_factory=list)
    selected: list[SelectedSentence] = field(default_factory=list)
    annotation: Optional[dict] = None

    def as_dict(self) -> dict:
        return {
            "speaker": self.speaker,
            "text": self.text,
            "searches": [
                {"query": a.query,
                 "results": [{"url": r.url, "title": r.title,
                              "content": r.content} for r in a.results]}
                for a in self.searches
            ],
            "selected": [{"doc_url": s.doc_url, "sentence": s.sentence}
                         for s in self.selected],
            "annotation": self.annotation,
        }


@dataclass
class Session:
    session_id: str
    role: str  # "wizard" | "eval"
    persona_options: dict
    turn_limit: int
    require_annotation: bool
    bot_first: bool
    first_speaker: str = APPRENTICE
    persona: list[str] = field(default_factory=list)
    messages: list[SessionMessage] = field(default_factory=list)
    pending_searches: list[SearchAction] = field(default_factory=list)
    pending_selected: list[SelectedSentence] = field(default_factory=list)
    final_rating: Optional[int] = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    # -- state -------------------------------------------------------------

    def next_speaker(self) -> str:
        if self.role == "eval":
            # the bot plays the wizard; the human is always the apprentice
            if not self.messages:
                return WIZARD if self.bot_first else APPRENTICE
            return APPRENTICE if self.messages[-1].speaker == WIZARD else WIZARD
        if not self.messages:
            return self.first_speaker
        return (APPRENTICE if self.messages[-1].speaker == WIZARD else WIZARD)

    def at_limit(self) -> bool:
        return len(self.messages) >= self.turn_limit

    def needs_final_rating(self) -> bool:
        return (self.role == "eval" and self.at_limit()
                and self.final_rating is None)

    def unannotated_bot_turn(self) -> Optional[int]:
        for idx in range(len(self.messages) - 1, -1, -1):
            msg = self.messages[idx]
            if msg.speaker == WIZARD:
                return idx if msg.annotation is None else None
        return None

    def as_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "role": self.role,
            "persona_options": self.persona_options,
            "persona": list(self.persona),
            "first_speaker": self.first_speaker,
            "next_speaker": self.next_speaker(),
            "turn_limit": self.turn_limit,
            "require_annotation": self.require_annotation,
            "messages": [m.as_dict() for m in self.messages],
            "pending": {
                "searches": [
                    {"query": a.query,
                     "results": [{"url": r.url, "title": r.title,
                                  "content": r.content,
                                  "sentences": split_sentences(r.content)}
                                 for r in a.results]}
                    for a in self.pending_searches
                ],
                "selected": [{"doc_url": s.doc_url, "sentence": s.sentence}
                             for s in self.pending_selected],
            },
            "message_count": len(self.messages),
            "at_limit": self.at_limit(),
            "needs_final_rating": self.needs_final_rating(),
            "final_rating": self.final_rating,
        }

    # -- mutations (call under the session lock) ----------------------------

    def set_persona(self, persona: str, refinement: str) -> None:
        if self.messages:
            raise SessionError(409, "persona_locked",
                               "persona cannot change after the first message")
        self.persona = [persona] + ([refinement] if refinement.strip() else [])

    def record_search(self, action: SearchAction) -> None:
        if self.role != "wizard":
            raise SessionError(403, "search_not_allowed",
                               "only wizard sessions can search")
        if not self.persona:
            raise SessionError(409, "persona_required",
                               "choose a persona before searching")
        # pending searches attach to the next wizard message, whenever it comes
        self.pending_searches.append(action)

    def record_selection(self, doc_url: str, sentence: str) -> None:
        if self.role != "wizard":
            raise SessionError(403, "search_not_allowed",
                               "only wizard sessions can select sentences")
        for action in self.pending_searches:
            for res in action.results:
                if res.url == doc_url and sentence in split_sentences(res.content):
                    self.pending_selected.append(
                        SelectedSentence(doc_url, sentence))
                    return
        raise SessionError(
            409, "sentence_not_in_results",
            "selections must reference a sentence of this turn's results")

    def append_human_message(self, text: str) -> SessionMessage:
        if not self.persona:
            raise SessionError(409, "persona_required",
                               "choose a persona before chatting")
        if self.at_limit():
            raise SessionError(409, "turn_limit_reached",
                               f"this session is capped at {self.turn_limit} messages")
        if self.role == "eval":
            if self.require_annotation:
                idx = self.unannotated_bot_turn()
                if idx is not None:
                    raise SessionError(
                        409, "annotation_required",
                        f"annotate message {idx} before sending the next one")
            msg = SessionMessage(APPRENTICE, text)
        else:
            speaker = self.next_speaker()
            msg = SessionMessage(speaker, text)
            if speaker == WIZARD:
                msg.searches = list(self.pending_searches)
                msg.selected = list(self.pending_selected)
                self.pending_searches = []
                self.pending_selected = []
        self.messages.append(msg)
        return msg

    def append_bot_message(self, text: str,
                           searches: list[SearchAction]) -> SessionMessage:
        msg = SessionMessage(WIZARD, text, searches=searches)
        self.messages.append(msg)
        return msg

    def annotate(self, turn_index: int, flags: dict) -> None:
        if self.role != "eval":
            raise SessionError(403, "not_eval_session",
                               "annotations only apply to eval sessions")
        if not 0 <= turn_index < len(self.messages):
            raise SessionError(404, "no_such_turn",
                               f"turn {turn_index} does not exist")
        msg = self.messages[turn_index]
        if msg.speaker != WIZARD:
            raise SessionError(409, "not_a_bot_turn",
                               "only bot responses are annotated")
        msg.annotation = {attr: bool(flags[attr]) for attr in ATTRIBUTES}

    def set_final_rating(self, rating: int) -> None:
        if self.role != "eval":
            raise SessionError(403, "not_eval_session",
                               "final ratings only apply to eval sessions")
        self.final_rating = rating

    def export_dialogue(self) -> WizardDialogue:
        if len(self.messages) < 2:
            raise SessionError(409, "not_exportable",
                               "a dialogue needs at least 2 messages")
        if not self.persona:
            raise SessionError(409, "not_exportable", "no persona was chosen")
        turns = tuple(
            Turn(m.speaker, m.text, tuple(m.searches), tuple(m.selected))
            for m in self.messages
        )
        return WizardDialogue(self.session_id, tuple(self.persona), turns)


class SessionStore:
    def __init__(self, rng: Optional[random.Random] = None,
                 log_path: Optional[str | Path] = None):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._rng = rng or random.Random()
        self._log_path = Path(log_path) if log_path else None

    def log_event(self, event: str, session_id: str, **payload) -> None:
        if self._log_path is None:
            return
        record = {"ts": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                  "event": event, "session_id": session_id, **payload}
        with self._log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def create(self, role: str, *, turn_limit: int, require_annotation: bool,
               bot_first: bool, first_speaker: str) -> Session:
        with self._lock:
            session_id = uuid.uuid4().hex[:12]
            options = {
                "personas": self._rng.sample(personas.PERSONA_POOL, 3),
                "topics": self._rng.sample(personas.TOPIC_AREAS, 2),
                "topic_template": personas.TOPIC_TEMPLATE,
            }
            session = Session(
                session_id=session_id, role=role, persona_options=options,
                turn_limit=turn_limit, require_annotation=require_annotation,
                bot_first=bot_first, first_speaker=first_speaker,
            )
            if role == "eval":
                # the paper's eval flow starts from a shown persona
                session.persona = [options["personas"][0]]
            self._sessions[session_id] = session
        self.log_event("session_created", session_id, role=role)
        return session

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise SessionError(404, "no_such_session",
                               f"unknown session {session_id!r}")
        return session

    def all_sessions(self) -> list[Session]:
        with self._lock:
            return list(self._sessions.values())

    def aggregate(self) -> dict:
        """Attribute percentages over annotated bot turns, plus mean rating."""
        counts = {attr: 0 for attr in ATTRIBUTES}
        n_annotated = 0
        ratings = []
        eval_sessions = 0
        for session in self.all_sessions():
            if session.role != "eval":
                continue
            eval_sessions += 1
            for msg in session.messages:
                if msg.speaker == WIZARD and msg.annotation is not None:
                    n_annotated += 1
                    for attr in ATTRIBUTES:
                        if msg.annotation[attr]:
                            counts[attr] += 1
            if session.final_rating is not None:
                ratings.append(session.final_rating)
        pct = {
            f"pct_{attr}": (100.0 * counts[attr] / n_annotated
                            if n_annotated else 0.0)
            for attr in ATTRIBUTES
        }
        return {
            "n_sessions": eval_sessions,
            "n_annotated_responses": n_annotated,
            **pct,
            "mean_final_rating": (sum(ratings) / len(ratings)
                                  if ratings else 0.0),
            "n_rated": len(ratings),
        }

    def flush(self) -> None:
        for session in self.all_sessions():
            self.log_event("session_snapshot", session.session_id,
                           state=session.as_dict())


def export_line(session: Session) -> str:
    return dialogue_line(session.export_dialogue())
