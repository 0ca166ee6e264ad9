import json
import math

import httpx
import pytest

from sea.corpus import Document, DocumentStore
from sea.errors import EmptyQuery, EngineUnavailable, QuotaExceeded
from sea.search import (IDF_FLOOR, Bm25Index, LocalSearchEngine,
                        RemoteSearchClient, SearchQuery, SearchResults,
                        dual_news_search)
from sea.text import index_tokens


def store_from(*docs) -> DocumentStore:
    store = DocumentStore()
    for doc in docs:
        store.add(doc)
    return store.freeze()


def okapi(tf, df, n_docs, dl, avg_dl, k1=1.2, b=0.75):
    idf = max(math.log((n_docs - df + 0.5) / (df + 0.5)), IDF_FLOOR)
    return idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avg_dl))


class TestBm25:
    def test_two_doc_hand_arithmetic(self):
        # doc lengths 5 and 5, df(tennis)=1 in a 2-doc corpus: idf floors
        a = Document("https://a.com/1", "a", "tennis match tonight tennis fans")
        b = Document("https://b.com/1", "b", "tax policy update for savers")
        index = Bm25Index(store_from(a, b), k1=1.2, b=0.75)
        expected_a = okapi(tf=2, df=1, n_docs=2, dl=5, avg_dl=5.0)
        ranked = index.rank(["tennis"], n=5)
        assert ranked == [("https://a.com/1", pytest.approx(expected_a,
                                                            rel=1e-12))]

    def test_absent_term_contributes_zero(self):
        a = Document("https://a.com/1", "a", "alpha beta gamma")
        index = Bm25Index(store_from(a))
        assert index.rank(["zzz"], n=5) == []

    def test_single_doc_positive_via_floor(self):
        a = Document("https://a.com/1", "a", "tennis every day")
        index = Bm25Index(store_from(a))
        ranked = index.rank(["tennis"], n=1)
        assert len(ranked) == 1 and ranked[0][1] > 0

    def test_three_doc_ordering_matches_formula(self):
        # two docs contain "tennis" (tf 2 vs 1), one does not
        a = Document("https://a.com/1", "a",
                     "tennis tennis court booking open")
        b = Document("https://b.com/1", "b",
                     "local tennis club schedules summer lessons for kids")
        c = Document("https://c.com/1", "c", "tax filing deadline nears")
        index = Bm25Index(store_from(a, b, c))
        lens = {u: len(index_tokens(d.content)) for u, d in
                (("https://a.com/1", a), ("https://b.com/1", b),
                 ("https://c.com/1", c))}
        avg = sum(lens.values()) / 3
        expect = {
            "https://a.com/1": okapi(2, 2, 3, lens["https://a.com/1"], avg),
            "https://b.com/1": okapi(1, 2, 3, lens["https://b.com/1"], avg),
        }
        ranked = index.rank(["tennis"], n=5)
        assert [u for u, _ in ranked] == ["https://a.com/1", "https://b.com/1"]
        for url, score in ranked:
            assert score == pytest.approx(expect[url], rel=1e-12)

    def test_tie_breaks_on_url(self):
        a = Document("https://z.com/1", "z", "same words here")
        b = Document("https://a.com/1", "a", "same words here")
        index = Bm25Index(store_from(a, b))
        ranked = index.rank(["same"], n=5)
        assert [u for u, _ in ranked] == ["https://a.com/1", "https://z.com/1"]

    def test_monotone_in_tf_for_positive_idf(self):
        # 4-doc corpus, term in one doc: idf > 0; adding an occurrence at
        # fixed length must not lower the score
        filler = [Document(f"https://f.com/{i}", "f", "just filler text here")
                  for i in range(3)]
        low = Document("https://t.com/1", "t", "tennis filler filler filler")
        high = Document("https://t.com/1", "t", "tennis tennis filler filler")
        s_low = Bm25Index(store_from(low, *filler)).rank(["tennis"], 1)[0][1]
        s_high = Bm25Index(store_from(high, *filler)).rank(["tennis"], 1)[0][1]
        assert s_high > s_low

    def test_chunk_granularity_dedups_to_best_chunk(self):
        words = ["pad"] * 120 + ["tennis"] * 3 + ["pad"] * 30
        doc = Document("https://a.com/long", "long", " ".join(words))
        index = Bm25Index(store_from(doc), granularity="chunk")
        ranked = index.rank(["tennis"], n=5)
        assert len(ranked) == 1  # one url even though two chunks

    def test_rejects_unknown_granularity(self):
        with pytest.raises(ValueError):
            Bm25Index(store_from(), granularity="paragraph")


class TestLocalEngine:
    def test_fixture_corpus_search(self, corpus_store):
        engine = LocalSearchEngine(corpus_store)
        results = engine.search(SearchQuery("tennis"), n=5)
        assert 1 <= len(results.results) <= 5
        urls = results.urls()
        assert len(set(urls)) == len(urls)
        assert all("tennis" in index_tokens(d.title + " " + d.content)
                   for d in results.results)

    def test_empty_query(self, corpus_store):
        engine = LocalSearchEngine(corpus_store)
        with pytest.raises(EmptyQuery):
            engine.search(SearchQuery(""), n=5)
        with pytest.raises(EmptyQuery):
            engine.search(SearchQuery("   "), n=5)

    def test_n_one(self, corpus_store):
        engine = LocalSearchEngine(corpus_store)
        assert len(engine.search(SearchQuery("the"), n=1).results) <= 1

    def test_cross_build_determinism(self, corpus_store):
        r1 = LocalSearchEngine(corpus_store).search(SearchQuery("news"), 5)
        r2 = LocalSearchEngine(corpus_store).search(SearchQuery("news"), 5)
        assert r1.urls() == r2.urls()


class StubEngine:
    """Canned results for merge-rule tests."""

    engine_id = "stub"

    def __init__(self, by_query):
        self.by_query = by_query

    def search(self, query, n):
        docs = [
            Document(f"https://stub.example/{name}", name, f"content {name}")
            for name in self.by_query.get(query.text, [])
        ]
        return SearchResults(query, tuple(docs[:n]), self.engine_id)


class TestDualNewsSearch:
    def test_merge_rule(self):
        engine = StubEngine({"jazz news": ["A", "B", "C"], "jazz": ["B", "D"]})
        out = dual_news_search(engine, SearchQuery("jazz", augment_news=True),
                               n=4)
        assert [d.title for d in out.results] == ["A", "B", "D"]

    def test_augment_false_is_plain_search(self):
        engine = StubEngine({"jazz": ["B", "D"], "jazz news": ["A"]})
        out = dual_news_search(engine, SearchQuery("jazz", augment_news=False),
                               n=4)
        assert [d.title for d in out.results] == ["B", "D"]

    def test_plain_empty_news_only(self):
        engine = StubEngine({"jazz news": ["A"], "jazz": []})
        out = dual_news_search(engine, SearchQuery("jazz", augment_news=True),
                               n=4)
        assert [d.title for d in out.results] == ["A"]

    def test_truncation_to_n(self):
        engine = StubEngine({"jazz news": ["A", "B"],
                             "jazz": ["C", "D", "E", "F"]})
        out = dual_news_search(engine, SearchQuery("jazz", augment_news=True),
                               n=3)
        assert [d.title for d in out.results] == ["A", "B", "C"]


BING_SHAPE = {
    "webPages": {
        "value": [
            {"url": "https://en.wikipedia.org/wiki/Vesper_(cocktail)",
             "name": "Vesper (cocktail) - Wikipedia"},
            {"url": "https://www.esquire.com/food-drink/james-bond-cocktails",
             "name": "Every drink James Bond ordered"},
            {"url": "https://unknown.example.com/reviews",
             "name": "Bar reviews"},
        ]
    }
}


def replay_transport(payload=None, status=200, counter=None):
    def handler(request):
        if counter is not None:
            counter.append(request.url.params.get("q"))
        return httpx.Response(status, json=payload if payload is not None
                              else BING_SHAPE)
    return httpx.MockTransport(handler)


class TestRemoteClient:
    def test_replay_order_and_resolution(self, corpus_store, wikipedia_store):
        # no corpus hit for the wikipedia URL: force the title-lookup path
        small = store_from(corpus_store.lookup_by_url(
            "https://www.esquire.com/food-drink/james-bond-cocktails"))
        client = RemoteSearchClient(
            "https://api.example.com/search", api_key="k", store=small,
            wikipedia=wikipedia_store, transport=replay_transport())
        out = client.search(SearchQuery("james bond cocktail"), n=5)
        assert out.urls()[1] == \
            "https://www.esquire.com/food-drink/james-bond-cocktails"
        vesper = out.results[0]
        assert "Kina Lillet" in vesper.content  # wikipedia snapshot content
        assert out.results[1].content.startswith("James Bond has ordered")
        live = out.results[2]
        assert live.content == "" and live.source == "live"

    def test_http_500_engine_unavailable(self):
        client = RemoteSearchClient("https://api.example.com/search",
                                    api_key="k",
                                    transport=replay_transport(status=500))
        with pytest.raises(EngineUnavailable):
            client.search(SearchQuery("anything"), n=3)

    def test_quota_statuses(self):
        for status in (403, 429):
            client = RemoteSearchClient(
                "https://api.example.com/search", api_key="k",
                transport=replay_transport(status=status))
            with pytest.raises(QuotaExceeded):
                client.search(SearchQuery("anything"), n=3)

    def test_transport_error_engine_unavailable(self):
        def boom(request):
            raise httpx.ConnectError("nope", request=request)

        client = RemoteSearchClient("https://api.example.com/search",
                                    api_key="k",
                                    transport=httpx.MockTransport(boom))
        with pytest.raises(EngineUnavailable):
            client.search(SearchQuery("anything"), n=3)

    def test_cache_avoids_second_request(self, tmp_path):
        calls = []
        cache = tmp_path / "cache.jsonl"
        client = RemoteSearchClient(
            "https://api.example.com/search", api_key="k", cache_path=cache,
            transport=replay_transport(counter=calls))
        client.search(SearchQuery("james bond cocktail"), n=3)
        client.search(SearchQuery("james bond cocktail"), n=3)
        assert len(calls) == 1
        record = json.loads(cache.read_text().splitlines()[0])
        assert set(record) == {"query", "n", "urls", "titles", "fetched_at"}

        # a fresh client replays the cache file without any request
        calls2 = []
        client2 = RemoteSearchClient(
            "https://api.example.com/search", api_key="k", cache_path=cache,
            transport=replay_transport(counter=calls2))
        out = client2.search(SearchQuery("james bond cocktail"), n=3)
        assert calls2 == [] and len(out.results) == 3

    def test_empty_query(self):
        client = RemoteSearchClient("https://api.example.com/search",
                                    api_key="k",
                                    transport=replay_transport())
        with pytest.raises(EmptyQuery):
            client.search(SearchQuery("  "), n=3)

    def test_api_key_from_env(self, monkeypatch):
        captured = {}

        def handler(request):
            captured["key"] = request.headers.get("Ocp-Apim-Subscription-Key")
            return httpx.Response(200, json=BING_SHAPE)

        monkeypatch.setenv("SEA_SEARCH_API_KEY", "from-env")
        client = RemoteSearchClient("https://api.example.com/search",
                                    transport=httpx.MockTransport(handler))
        client.search(SearchQuery("q"), n=1)
        assert captured["key"] == "from-env"
