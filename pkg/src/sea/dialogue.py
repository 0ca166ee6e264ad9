"""Conversation state shared by query generation, assembly and evaluation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

WIZARD = "wizard"
APPRENTICE = "apprentice"
SPEAKERS = (WIZARD, APPRENTICE)


@dataclass(frozen=True)
class DialogueContext:
    """Apprentice persona plus the turns seen so far, oldest first.

    Speakers may repeat; strict alternation is not assumed anywhere.
    """

    persona: tuple[str, ...] = ()
    turns: tuple[tuple[str, str], ...] = ()  # (speaker, text)

    def with_turn(self, speaker: str, text: str) -> "DialogueContext":
        if speaker not in SPEAKERS:
            raise ValueError(f"unknown speaker: {speaker!r}")
        return replace(self, turns=self.turns + ((speaker, text),))

    def last_texts(self, n: int) -> list[str]:
        return [text for _, text in self.turns[-n:]]

    def flatten(self) -> str:
        lines = list(self.persona)
        lines += [f"{speaker}: {text}" for speaker, text in self.turns]
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha1(self.flatten().encode("utf-8")).hexdigest()[:12]
