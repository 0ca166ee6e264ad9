"""Shared text-splitting rules.

Three deliberately distinct rules coexist and must not be conflated:

* ``words``      -- whitespace tokens; the unit for chunking, token budgets
                    and the toy language model.
* ``index_tokens`` -- lowercased alphanumeric runs; the unit for BM25,
                    feature hashing and query-term extraction.
* ``split_sentences`` -- the single sentence rule used both by the selection
                    UI and by knowledge integrity checks.
"""

import re

_TOKEN_RE = re.compile(r"\w+")
_SENT_RE = re.compile(r"(?<=[.!?])\s+")


def words(text: str) -> list[str]:
    return text.split()


def index_tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    return [part for part in (p.strip() for p in _SENT_RE.split(text)) if part]
