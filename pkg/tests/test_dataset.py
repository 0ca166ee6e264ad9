import json
import random

import pytest

from sea.dataset import (DatasetStats, QueryPair, ResponsePair, compute_stats,
                         extract_pairs, load_dataset, mix_regularized,
                         save_dataset)
from sea.errors import ParseError, SchemaViolation
from sea.fusion import NO_KNOWLEDGE

from conftest import DIALOGUES_PATH, EVAL_PATH


@pytest.fixture(scope="module")
def dialogues():
    return load_dataset(DIALOGUES_PATH)


def record_with(mutate):
    """A minimal valid dialogue record, mutated by the callback."""
    doc = {"url": "https://x.example/1", "title": "t",
           "content": "One fact here. Another fact there."}
    rec = {
        "id": "d1",
        "persona": ["I like facts."],
        "turns": [
            {"speaker": "apprentice", "text": "tell me a fact",
             "searches": [], "selected": []},
            {"speaker": "wizard", "text": "here is one",
             "searches": [{"query": "facts", "results": [doc]}],
             "selected": [{"doc_url": doc["url"],
                           "sentence": "One fact here."}]},
        ],
    }
    mutate(rec)
    return rec


def write_lines(tmp_path, *records):
    path = tmp_path / "data.jsonl"
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


class TestLoad:
    def test_fixture_loads(self, dialogues):
        assert len(dialogues) == 3
        assert all(len(d.turns) >= 2 for d in dialogues)

    def test_round_trip_byte_identical(self, dialogues, tmp_path):
        out = tmp_path / "roundtrip.jsonl"
        save_dataset(dialogues, out)
        assert out.read_bytes() == DIALOGUES_PATH.read_bytes()
        assert load_dataset(out) == dialogues

    def test_parse_error_line_number(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text(dialogue_line_ok() + "\n{oops\n", encoding="utf-8")
        with pytest.raises(ParseError) as exc:
            load_dataset(path)
        assert exc.value.line == 2

    def test_apprentice_with_search_rejected(self, tmp_path):
        def mutate(rec):
            rec["turns"][0]["searches"] = rec["turns"][1]["searches"]
        path = write_lines(tmp_path, record_with(lambda r: None),
                           record_with(mutate))
        with pytest.raises(SchemaViolation) as exc:
            load_dataset(path)
        assert exc.value.line == 2 and exc.value.field == "searches"

    def test_selected_must_be_reachable(self, tmp_path):
        def mutate(rec):
            rec["turns"][1]["selected"][0]["sentence"] = "Never written."
        path = write_lines(tmp_path, record_with(mutate))
        with pytest.raises(SchemaViolation) as exc:
            load_dataset(path)
        assert exc.value.field == "selected"

    def test_key_set_is_exact(self, tmp_path):
        def extra(rec):
            rec["stray"] = 1
        with pytest.raises(SchemaViolation):
            load_dataset(write_lines(tmp_path, record_with(extra)))

        def missing(rec):
            del rec["persona"]
        with pytest.raises(SchemaViolation):
            load_dataset(write_lines(tmp_path, record_with(missing)))

    def test_too_few_turns(self, tmp_path):
        def mutate(rec):
            rec["turns"] = rec["turns"][:1]
        with pytest.raises(SchemaViolation) as exc:
            load_dataset(write_lines(tmp_path, record_with(mutate)))
        assert exc.value.field == "turns"

    def test_empty_query_rejected(self, tmp_path):
        def mutate(rec):
            rec["turns"][1]["searches"][0]["query"] = "  "
        with pytest.raises(SchemaViolation) as exc:
            load_dataset(write_lines(tmp_path, record_with(mutate)))
        assert exc.value.field == "query"


def dialogue_line_ok():
    return json.dumps(record_with(lambda r: None))


class TestStats:
    def test_hand_counted_fixture_values(self, dialogues):
        stats = compute_stats(dialogues)
        assert stats.n_dialogues == 3
        assert stats.n_utterances == 28
        assert stats.n_searches == 9
        assert stats.n_unique_selected_urls == 6
        assert stats.n_unique_selected_domains == 4
        # 14 wizard turns, 8 with >= 1 search, 6 searching turns selected
        assert stats.pct_wizard_turns_with_search == pytest.approx(
            100 * 8 / 14)
        assert stats.avg_queries_per_searching_turn == pytest.approx(9 / 8)
        assert stats.pct_searching_turns_with_selection == pytest.approx(75.0)
        assert stats.avg_utterances_per_dialogue == pytest.approx(28 / 3)

    def test_word_lengths_against_raw_file(self, dialogues,
                                           raw_dialogue_records):
        lens = [len(t["text"].split())
                for rec in raw_dialogue_records for t in rec["turns"]]
        expected = sum(lens) / len(lens)
        assert compute_stats(dialogues).avg_utterance_len == \
            pytest.approx(expected, abs=1e-12)

    def test_empty_input_is_all_zeros(self):
        stats = compute_stats([])
        assert stats == DatasetStats(0, 0, 0.0, 0.0, 0, 0, 0, 0.0, 0.0, 0.0)

    def test_permutation_invariance(self, dialogues):
        shuffled = list(dialogues)
        random.Random(3).shuffle(shuffled)
        assert compute_stats(shuffled) == compute_stats(dialogues)

    def test_table_renders(self, dialogues):
        table = compute_stats(dialogues).as_table()
        assert "Number of Dialogues" in table and "28" in table


class TestPairs:
    def test_query_pairs_use_last_query(self, dialogues):
        pairs = extract_pairs(dialogues, "query_pairs")
        assert len(pairs) == 8  # searching wizard turns in the fixture
        assert all(isinstance(p, QueryPair) for p in pairs)
        # D1's two-search turn keeps the later query
        queries = [p.query for p in pairs]
        assert "tennis finals results" in queries
        assert "nadal french open clay record" not in queries

    def test_query_choice_variants(self, dialogues):
        first = extract_pairs(dialogues, "query_pairs", query_choice="first")
        assert "nadal french open clay record" in [p.query for p in first]
        everything = extract_pairs(dialogues, "query_pairs", query_choice="all")
        assert len(everything) == 9  # one pair per recorded search

    def test_response_pairs_one_per_wizard_turn(self, dialogues):
        pairs = extract_pairs(dialogues, "response_pairs")
        assert len(pairs) == 14
        assert all(isinstance(p, ResponsePair) for p in pairs)
        for pair in pairs:
            assert all(s == "apprentice" or s == "wizard"
                       for s, _ in pair.context.turns)

    def test_context_excludes_current_turn(self, dialogues):
        pairs = extract_pairs(dialogues, "response_pairs")
        for pair in pairs:
            assert all(text != pair.response for _, text in pair.context.turns)

    def test_selected_text_reachable_from_docs(self, dialogues):
        # KF1 integrity: every selection is a substring of a recorded doc
        for d in dialogues:
            for turn in d.turns:
                for sel in turn.selected:
                    assert any(sel.sentence in res.content
                               for a in turn.searches for res in a.results)

    def test_unknown_kind(self, dialogues):
        with pytest.raises(ValueError):
            extract_pairs(dialogues, "both")


@pytest.fixture(scope="module")
def selection_pair():
    pairs = extract_pairs(load_dataset(EVAL_PATH), "response_pairs")
    return next(p for p in pairs if p.selected)


class TestMixer:
    def test_rho_zero_always_response(self, selection_pair):
        rng = random.Random(1)
        for _ in range(50):
            ex = mix_regularized(selection_pair, 0.0, rng)
            assert ex.task == "response"
            assert ex.target == selection_pair.response

    def test_rho_one_always_knowledge(self, selection_pair):
        rng = random.Random(2)
        for _ in range(50):
            ex = mix_regularized(selection_pair, 1.0, rng)
            assert ex.task == "knowledge"
            assert ex.target == " ".join(
                s.sentence for s in selection_pair.selected)

    def test_no_selection_forces_response(self, dialogues):
        pairs = extract_pairs(dialogues, "response_pairs")
        pair = next(p for p in pairs if not p.selected)
        rng = random.Random(3)
        assert mix_regularized(pair, 1.0, rng).task == "response"

    def test_mixing_fraction_near_rho(self, selection_pair):
        rng = random.Random(1234)
        draws = 10_000
        knowledge = sum(
            mix_regularized(selection_pair, 0.33, rng).task == "knowledge"
            for _ in range(draws))
        assert abs(knowledge / draws - 0.33) <= 0.02

    def test_fid_input_defaults_to_recorded_docs(self, selection_pair,
                                                 dialogues):
        rng = random.Random(4)
        ex = mix_regularized(selection_pair, 0.0, rng)
        assert len(ex.fid_input.segments) == len(selection_pair.docs)
        bare = extract_pairs(dialogues, "response_pairs")
        no_docs = next(p for p in bare if not p.docs)
        assert mix_regularized(no_docs, 0.0, rng).fid_input.mode == NO_KNOWLEDGE

    def test_rho_out_of_range(self, selection_pair):
        with pytest.raises(ValueError):
            mix_regularized(selection_pair, 1.5, random.Random(0))
