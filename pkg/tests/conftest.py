import json
from pathlib import Path

import numpy as np
import pytest

from sea.corpus import DocumentStore

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"

CORPUS_PATH = DATA / "fixture_corpus.jsonl"
WIKIPEDIA_PATH = DATA / "fixture_wikipedia.jsonl"
DIALOGUES_PATH = DATA / "fixture_dialogues.jsonl"
EVAL_PATH = DATA / "fixture_eval.jsonl"


@pytest.fixture(scope="session")
def corpus_store() -> DocumentStore:
    return DocumentStore.load(CORPUS_PATH)


@pytest.fixture(scope="session")
def wikipedia_store() -> DocumentStore:
    return DocumentStore.load(WIKIPEDIA_PATH)


@pytest.fixture(scope="session")
def raw_dialogue_records() -> list[dict]:
    with DIALOGUES_PATH.open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class UniformLM:
    """Assigns 1/V to every token; vocabulary is w0..w{V-1} plus markers."""

    def __init__(self, vocab_size: int):
        self.vocab = ["<s>", "</s>", "<unk>"] + [
            f"w{i}" for i in range(vocab_size - 3)
        ]
        assert len(self.vocab) == vocab_size
        self.bos_id, self.eos_id, self.unk_id = 0, 1, 2
        self._ids = {t: i for i, t in enumerate(self.vocab)}

    def token_ids(self, text):
        return [self._ids.get(t, self.unk_id) for t in text.split()]

    def tokens_to_text(self, ids):
        return " ".join(self.vocab[i] for i in ids)

    def next_dist(self, conditioning, prefix):
        v = len(self.vocab)
        return np.full(v, 1.0 / v)


@pytest.fixture
def uniform_lm_cls():
    return UniformLM
