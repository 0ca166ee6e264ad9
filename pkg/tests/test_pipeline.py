import json
from pathlib import Path

import pytest

from sea.corpus import DocumentStore
from sea.dataset import load_dataset
from sea.decoding import GenerationParams, beam_search
from sea.dense import HashingEmbedder
from sea.dialogue import DialogueContext
from sea.errors import EngineUnavailable
from sea.fusion import NO_KNOWLEDGE, assemble_fid_contexts
from sea.lm import train_ngram_lm
from sea.pipeline import Pipeline, PipelineConfig, build_dense_index
from sea.querygen import CorpusStats, ExtractiveQueryBaseline
from sea.search import LocalSearchEngine

from conftest import CORPUS_PATH, EVAL_PATH

GOLDEN_PATH = Path(__file__).parent / "data" / "golden_turn.json"

GEN = GenerationParams(beam_size=3, min_len=20, block_ngram=3, max_len=40,
                       seed=7)

CTX = DialogueContext(
    persona=("I love tennis, Rafael Nadal is my favorite player.",),
    turns=(
        ("apprentice", "I watched the French Open final yesterday."),
        ("wizard", "It was a great match, clay suits him so well."),
        ("apprentice", "How many titles does Rafael Nadal have now?"),
    ),
)


def fixture_components(store=None):
    store = store or DocumentStore.load(CORPUS_PATH)
    lm = train_ngram_lm([doc.content for doc in store], order=3, k=0.1)
    engine = LocalSearchEngine(store)
    generator = ExtractiveQueryBaseline(CorpusStats.from_store(store))
    return store, lm, engine, generator


def make_pipeline(mode="engine", store=None, rag_token=False, lm=True):
    store, toy_lm, engine, generator = fixture_components(store)
    config = PipelineConfig(retrieval_mode=mode, generation=GEN,
                            rag_token=rag_token)
    kwargs = {"store": store, "lm": toy_lm if lm else None}
    if mode == "engine":
        kwargs.update(engine=engine, query_generator=generator)
    elif mode in ("dense_context", "dense_query"):
        embedder = HashingEmbedder(512)
        index, chunk_map = build_dense_index(store, embedder)
        kwargs.update(dense_index=index, embedder=embedder,
                      chunk_map=chunk_map)
        if mode == "dense_query":
            kwargs["query_generator"] = generator
    return Pipeline(config, **kwargs)


class FailingEngine:
    engine_id = "failing"

    def search(self, query, n):
        raise EngineUnavailable("engine is down")


class TestRunWizardTurn:
    def test_none_mode_has_no_query(self):
        pipeline = make_pipeline("none")
        response, trace = pipeline.run_wizard_turn(CTX)
        assert response
        assert trace.generated_query is None
        assert trace.assembled_mode == NO_KNOWLEDGE
        assert trace.engine_results == ()

    def test_engine_mode_populates_trace(self):
        pipeline = make_pipeline("engine")
        response, trace = pipeline.run_wizard_turn(CTX)
        assert response
        assert trace.generated_query
        assert 1 <= len(trace.engine_results) <= 5
        assert trace.assembled_mode == "fid"
        assert not trace.degraded
        assert set(trace.timing) == {"retrieve_s", "decode_s"}

    @pytest.mark.parametrize("mode", ["dense_context", "dense_query"])
    def test_dense_modes(self, mode):
        pipeline = make_pipeline(mode)
        response, trace = pipeline.run_wizard_turn(CTX)
        assert response
        assert trace.assembled_mode == "fid"
        assert all("#w" in url for url in trace.engine_results)

    def test_rag_token_decode(self):
        pipeline = make_pipeline("dense_context", rag_token=True)
        response, trace = pipeline.run_wizard_turn(CTX)
        assert response and trace.assembled_mode == "fid"

    def test_engine_failure_degrades(self):
        store, lm, _, generator = fixture_components()
        pipeline = Pipeline(
            PipelineConfig(retrieval_mode="engine", generation=GEN),
            store=store, lm=lm, engine=FailingEngine(),
            query_generator=generator)
        response, trace = pipeline.run_wizard_turn(CTX)
        assert response
        assert trace.degraded
        assert trace.assembled_mode == NO_KNOWLEDGE

    def test_deterministic_across_fresh_builds(self):
        r1, t1 = make_pipeline("engine").run_wizard_turn(CTX)
        r2, t2 = make_pipeline("engine").run_wizard_turn(CTX)
        assert r1 == r2
        assert t1.as_dict(include_timing=False) == \
            t2.as_dict(include_timing=False)

    def test_matches_golden_file(self):
        response, trace = make_pipeline("engine").run_wizard_turn(CTX)
        golden = json.loads(GOLDEN_PATH.read_text(encoding="utf-8"))
        assert trace.as_dict(include_timing=False) == golden

    def test_missing_components_rejected(self):
        store, lm, engine, generator = fixture_components()
        with pytest.raises(ValueError):
            Pipeline(PipelineConfig(retrieval_mode="engine"), store=store,
                     lm=lm, query_generator=generator)  # no engine
        with pytest.raises(ValueError):
            Pipeline(PipelineConfig(retrieval_mode="dense_query"),
                     store=store, lm=lm)


def perfect_copy(ctx, turn):
    return turn.text


def knowledge_copy(ctx, turn):
    return " ".join(s.sentence for s in turn.selected)


def context_echo(ctx, turn):
    return ctx.turns[-1][1]


@pytest.fixture(scope="module")
def eval_dialogues():
    return load_dataset(EVAL_PATH)


@pytest.fixture(scope="module")
def scoring_pipeline():
    # metric comparisons need no retrieval or LM
    store = DocumentStore.load(CORPUS_PATH)
    return Pipeline(PipelineConfig(retrieval_mode="none"), store=store)


@pytest.fixture(scope="module")
def fixture_3dialogues():
    from conftest import DIALOGUES_PATH
    return load_dataset(DIALOGUES_PATH)


class TestEvaluate:
    def test_perfect_copy_scores_one(self, scoring_pipeline, eval_dialogues):
        report = scoring_pipeline.evaluate(eval_dialogues,
                                           responder=perfect_copy)
        assert report.f1 == 1.0
        assert report.n_examples == 50
        assert report.ppl is None

    def test_knowledge_copy_kf1_is_one(self, scoring_pipeline, eval_dialogues):
        report = scoring_pipeline.evaluate(eval_dialogues,
                                           responder=knowledge_copy)
        assert report.kf1 == 1.0

    def test_kf1_f1_trade_off_direction(self, scoring_pipeline,
                                        eval_dialogues):
        knowledge = scoring_pipeline.evaluate(eval_dialogues,
                                              responder=knowledge_copy)
        echo = scoring_pipeline.evaluate(eval_dialogues,
                                         responder=context_echo)
        perfect = scoring_pipeline.evaluate(eval_dialogues,
                                            responder=perfect_copy)
        assert knowledge.kf1 > echo.kf1
        assert knowledge.f1 < echo.f1 < perfect.f1

    def test_none_mode_equals_manual_context_only_decode(self):
        dialogues = load_dataset(EVAL_PATH)[:2]
        pipeline = make_pipeline("none")
        report = pipeline.evaluate(dialogues)

        lm = pipeline.lm
        responses = []
        for d in dialogues:
            ctx = DialogueContext(persona=d.apprentice_persona)
            for turn in d.turns:
                if turn.speaker == "wizard" and ctx.turns:
                    fid = assemble_fid_contexts(ctx, [], "search")
                    conditioning = fid.conditioning()
                    toks = beam_search(
                        lambda prefix: lm.next_dist(conditioning, prefix),
                        GEN, lm.eos_id)
                    responses.append(lm.tokens_to_text(toks))
                ctx = ctx.with_turn(turn.speaker, turn.text)

        rerun = []
        pipeline2 = make_pipeline("none")
        for d in dialogues:
            ctx = DialogueContext(persona=d.apprentice_persona)
            for turn in d.turns:
                if turn.speaker == "wizard" and ctx.turns:
                    fid, scores = pipeline2.assemble(ctx)
                    rerun.append(pipeline2.decode(fid, scores))
                ctx = ctx.with_turn(turn.speaker, turn.text)
        assert responses == rerun
        assert report.n_examples == len(responses)

    def test_wizard_turn_without_history_is_skipped(self, scoring_pipeline,
                                                    fixture_3dialogues):
        report = scoring_pipeline.evaluate(fixture_3dialogues,
                                           responder=perfect_copy)
        # D2 opens with a wizard turn: 14 wizard turns, 13 evaluable
        assert report.n_examples == 13

    def test_worker_count_does_not_change_the_report(self, eval_dialogues):
        pipeline = make_pipeline("engine")
        serial = pipeline.evaluate(eval_dialogues, workers=1)
        threaded = pipeline.evaluate(eval_dialogues, workers=4)
        assert serial == threaded
