"""FastAPI service wrapping the pipeline for the workbench and the CLI.

Heavy components (snapshot store, BM25 index, dense index, toy language
model) are built lazily from the configured corpus and cached on the app
state; they are read-only at serve time, so concurrent sessions can share
them.
"""

from __future__ import annotations

import random
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse

from ..corpus import DocumentStore
from ..dataset import SearchAction, compute_stats, load_dataset
from ..decoding import GenerationParams
from ..dense import DenseIndex, HashingEmbedder
from ..dialogue import APPRENTICE, DialogueContext
from ..errors import (EmptyQuery, EngineUnavailable, ParseError, QuotaExceeded,
                      SchemaViolation, SeaError)
from ..lm import train_ngram_lm
from ..pipeline import Pipeline, PipelineConfig, build_dense_index
from ..querygen import CorpusStats, ExtractiveQueryBaseline
from ..search import (LocalSearchEngine, RemoteSearchClient, SearchQuery,
                      dual_news_search)
from ..text import split_sentences
from .schemas import (AnnotateRequest, CreateSessionRequest, EvalRequest,
                      IndexBuildRequest, MessageRequest, PersonaRequest,
                      RatingRequest, SearchRequest, SelectRequest,
                      StatsRequest)
from .sessions import SessionError, SessionStore, export_line


@dataclass
class ServiceSettings:
    corpus_path: Optional[str] = None
    wikipedia_path: Optional[str] = None
    engine: str = "local"  # "local" | "remote"
    remote_endpoint: Optional[str] = None
    remote_cache_path: Optional[str] = None
    retrieval_mode: str = "engine"
    n_docs: int = 5
    generation: GenerationParams = field(default_factory=GenerationParams)
    augment_news: bool = True  # collection-tool default: dual news search
    k1: float = 1.2
    b: float = 0.75
    dims: int = 4096
    lm_order: int = 3
    lm_k: float = 0.1
    turn_limit: int = 15
    require_annotation: bool = True
    bot_first: bool = True
    seed: Optional[int] = None
    session_log: Optional[str] = None
    static_dir: Optional[str] = None


class AppState:
    def __init__(self, settings: ServiceSettings):
        self.settings = settings
        self._lock = threading.Lock()
        self._store: Optional[DocumentStore] = None
        self._wikipedia: Optional[DocumentStore] = None
        self._engine = None
        self._query_generator = None
        self._lm = None
        self._dense: Optional[tuple[DenseIndex, dict]] = None
        rng = random.Random(settings.seed) if settings.seed is not None else None
        self.sessions = SessionStore(rng=rng, log_path=settings.session_log)

    @property
    def store(self) -> DocumentStore:
        with self._lock:
            if self._store is None:
                if self.settings.corpus_path is None:
                    raise SeaError("no corpus configured")
                self._store = DocumentStore.load(self.settings.corpus_path)
            return self._store

    @property
    def wikipedia(self) -> Optional[DocumentStore]:
        with self._lock:
            if self._wikipedia is None and self.settings.wikipedia_path:
                self._wikipedia = DocumentStore.load(self.settings.wikipedia_path)
            return self._wikipedia

    @property
    def engine(self):
        store = self.store
        with self._lock:
            if self._engine is None:
                if self.settings.engine == "remote":
                    if not self.settings.remote_endpoint:
                        raise SeaError("remote engine needs an endpoint")
                    self._engine = RemoteSearchClient(
                        self.settings.remote_endpoint,
                        store=store, wikipedia=self.wikipedia,
                        cache_path=self.settings.remote_cache_path)
                else:
                    self._engine = LocalSearchEngine(
                        store, k1=self.settings.k1, b=self.settings.b)
            return self._engine

    @property
    def query_generator(self):
        store = self.store
        with self._lock:
            if self._query_generator is None:
                self._query_generator = ExtractiveQueryBaseline(
                    CorpusStats.from_store(store))
            return self._query_generator

    @property
    def lm(self):
        store = self.store
        with self._lock:
            if self._lm is None:
                self._lm = train_ngram_lm(
                    [doc.content for doc in store],
                    order=self.settings.lm_order, k=self.settings.lm_k)
            return self._lm

    def dense(self) -> tuple[DenseIndex, dict]:
        store = self.store
        with self._lock:
            if self._dense is None:
                embedder = HashingEmbedder(self.settings.dims)
                self._dense = build_dense_index(store, embedder)
            return self._dense

    def pipeline(self, config: PipelineConfig) -> Pipeline:
        kwargs: dict = {"store": self.store, "lm": self.lm}
        if config.retrieval_mode == "engine":
            kwargs["engine"] = self.engine
            kwargs["query_generator"] = self.query_generator
        elif config.retrieval_mode in ("dense_context", "dense_query"):
            index, chunk_map = self.dense()
            kwargs["dense_index"] = index
            kwargs["embedder"] = HashingEmbedder(self.settings.dims)
            kwargs["chunk_map"] = chunk_map
            if config.retrieval_mode == "dense_query":
                kwargs["query_generator"] = self.query_generator
        return Pipeline(config, **kwargs)

    def default_pipeline(self) -> Pipeline:
        cfg = PipelineConfig(
            retrieval_mode=self.settings.retrieval_mode,
            n_docs=self.settings.n_docs,
            generation=self.settings.generation,
            augment_news=self.settings.augment_news,
        )
        return self.pipeline(cfg)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"code": code, "message": message})


def create_app(settings: Optional[ServiceSettings] = None) -> FastAPI:
    settings = settings or ServiceSettings()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        app.state.sea.sessions.flush()

    app = FastAPI(title="sea-dialogue", lifespan=lifespan)
    state = AppState(settings)
    app.state.sea = state

    @app.exception_handler(SessionError)
    async def session_error(_: Request, exc: SessionError):
        return _error(exc.status, exc.code, exc.message)

    @app.exception_handler(SeaError)
    async def sea_error(_: Request, exc: SeaError):
        status = 400
        if isinstance(exc, EngineUnavailable):
            status = 503
        elif isinstance(exc, QuotaExceeded):
            status = 429
        elif isinstance(exc, (ParseError, SchemaViolation)):
            status = 422
        return _error(status, type(exc).__name__.lower(), str(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_error(_: Request, exc: RequestValidationError):
        return _error(422, "validation_error", str(exc.errors()[:3]))

    @app.exception_handler(FileNotFoundError)
    async def missing_file(_: Request, exc: FileNotFoundError):
        return _error(404, "file_not_found", str(exc))

    # -- health ------------------------------------------------------------

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    # -- sessions ----------------------------------------------------------

    @app.post("/api/session", status_code=201)
    def create_session(req: CreateSessionRequest):
        limit = req.turn_limit or settings.turn_limit
        require = (settings.require_annotation
                   if req.require_annotation is None else req.require_annotation)
        bot_first = settings.bot_first if req.bot_first is None else req.bot_first
        session = state.sessions.create(
            req.role, turn_limit=limit, require_annotation=require,
            bot_first=bot_first, first_speaker=req.first_speaker)
        if req.role == "eval" and bot_first:
            with session.lock:
                _bot_reply(session)
        return {"session_id": session.session_id, "role": session.role,
                "persona_options": session.persona_options,
                "state": session.as_dict()}

    @app.get("/api/session/{session_id}")
    def get_session(session_id: str):
        return state.sessions.get(session_id).as_dict()

    @app.post("/api/session/{session_id}/persona")
    def set_persona(session_id: str, req: PersonaRequest):
        session = state.sessions.get(session_id)
        with session.lock:
            session.set_persona(req.persona, req.refinement)
        state.sessions.log_event("persona", session_id,
                                 persona=session.persona)
        return session.as_dict()

    @app.post("/api/session/{session_id}/search")
    def session_search(session_id: str, req: SearchRequest):
        session = state.sessions.get(session_id)
        if not req.query.strip():
            raise EmptyQuery("search query is blank")
        n = req.n or settings.n_docs
        query = SearchQuery(req.query, augment_news=req.augment_news)
        results = dual_news_search(state.engine, query, n)
        with session.lock:
            session.record_search(SearchAction(req.query, results.results))
        state.sessions.log_event("search", session_id, query=req.query,
                                 urls=results.urls())
        news_count = 2 if req.augment_news else 0
        return {
            "query": req.query,
            "augment_news": req.augment_news,
            "engine_id": results.engine_id,
            "results": [
                {"url": doc.url, "title": doc.title, "content": doc.content,
                 "sentences": split_sentences(doc.content),
                 "news": i < news_count}
                for i, doc in enumerate(results.results)
            ],
        }

    @app.post("/api/session/{session_id}/select")
    def session_select(session_id: str, req: SelectRequest):
        session = state.sessions.get(session_id)
        with session.lock:
            session.record_selection(req.doc_url, req.sentence)
        state.sessions.log_event("select", session_id, doc_url=req.doc_url)
        return session.as_dict()

    def _bot_reply(session) -> None:
        """Generate the bot's wizard turn from the session so far."""
        pipeline = state.default_pipeline()
        turns = [(m.speaker, m.text) for m in session.messages]
        if not turns:
            # opening turn: address the persona without storing a fake turn
            turns = [(APPRENTICE, " ".join(session.persona))]
        ctx = DialogueContext(persona=tuple(session.persona),
                              turns=tuple(turns))
        response, trace = pipeline.run_wizard_turn(ctx)
        searches = []
        if trace.generated_query and trace.retrieved:
            searches.append(SearchAction(trace.generated_query,
                                         trace.retrieved))
        session.append_bot_message(response, searches)

    @app.post("/api/session/{session_id}/message")
    def session_message(session_id: str, req: MessageRequest):
        session = state.sessions.get(session_id)
        with session.lock:
            session.append_human_message(req.text)
            if session.role == "eval" and not session.at_limit():
                _bot_reply(session)
        state.sessions.log_event("message", session_id, text=req.text)
        return session.as_dict()

    @app.post("/api/session/{session_id}/annotate")
    def session_annotate(session_id: str, req: AnnotateRequest):
        session = state.sessions.get(session_id)
        with session.lock:
            session.annotate(req.turn_index, req.model_dump())
        state.sessions.log_event("annotate", session_id,
                                 turn_index=req.turn_index)
        return session.as_dict()

    @app.post("/api/session/{session_id}/final_rating")
    def session_rating(session_id: str, req: RatingRequest):
        session = state.sessions.get(session_id)
        with session.lock:
            session.set_final_rating(req.rating)
        state.sessions.log_event("final_rating", session_id,
                                 rating=req.rating)
        return session.as_dict()

    @app.get("/api/session/{session_id}/export")
    def session_export(session_id: str):
        session = state.sessions.get(session_id)
        with session.lock:
            line = export_line(session)
        return PlainTextResponse(line + "\n",
                                 media_type="application/x-ndjson")

    @app.get("/api/aggregate")
    def aggregate():
        return state.sessions.aggregate()

    # -- batch operations ----------------------------------------------------

    @app.post("/api/eval")
    def run_eval(req: EvalRequest):
        dialogues = load_dataset(req.data)
        config = PipelineConfig(
            retrieval_mode=req.mode,
            n_docs=req.n_docs,
            generation=GenerationParams(
                beam_size=req.beam_size, min_len=req.min_len,
                block_ngram=req.block_ngram, max_len=req.max_len,
                seed=req.seed),
            augment_news=False,
        )
        pipeline = state.pipeline(config)
        report = pipeline.evaluate(dialogues, workers=req.workers)
        return {"config": config.as_dict(), "data": req.data,
                "metrics": report.as_dict()}

    @app.post("/api/stats")
    def run_stats(req: StatsRequest):
        stats = compute_stats(load_dataset(req.data))
        return {"stats": stats.as_dict(), "table": stats.as_table()}

    @app.post("/api/index/build")
    def build_index(req: IndexBuildRequest):
        store = DocumentStore.load(req.corpus)
        embedder = HashingEmbedder(req.dims)
        index, _ = build_dense_index(store, embedder)
        index.save(req.out)
        return {"count": len(index), "dims": index.dims,
                "embedder_id": index.embedder_id, "out": req.out}

    # -- static workbench ----------------------------------------------------

    static_dir = settings.static_dir
    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/app", StaticFiles(directory=static_dir, html=True),
                  name="workbench")

    return app
