"""Request and response bodies for the HTTP API."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    role: Literal["wizard", "eval"]
    first_speaker: Literal["wizard", "apprentice"] = "apprentice"
    bot_first: Optional[bool] = None
    require_annotation: Optional[bool] = None
    turn_limit: Optional[int] = Field(default=None, ge=2)


class PersonaRequest(BaseModel):
    persona: str = Field(min_length=1)
    refinement: str = ""


class SearchRequest(BaseModel):
    query: str
    augment_news: bool = False
    n: Optional[int] = Field(default=None, ge=1, le=50)


class SelectRequest(BaseModel):
    doc_url: str
    sentence: str = Field(min_length=1)


class MessageRequest(BaseModel):
    text: str = Field(min_length=1)


class AnnotateRequest(BaseModel):
    turn_index: int = Field(ge=0)
    consistent: bool
    engaging: bool
    knowledgeable: bool
    factually_incorrect: bool


class RatingRequest(BaseModel):
    rating: int = Field(ge=1, le=5)


class EvalRequest(BaseModel):
    data: str
    mode: Literal["none", "dense_context", "dense_query", "engine"] = "engine"
    n_docs: int = Field(default=5, ge=1)
    beam_size: int = Field(default=3, ge=1)
    min_len: int = Field(default=20, ge=0)
    block_ngram: int = Field(default=3, ge=0)
    max_len: int = Field(default=40, ge=1)
    seed: int = 0
    workers: int = Field(default=1, ge=1)


class StatsRequest(BaseModel):
    data: str


class IndexBuildRequest(BaseModel):
    corpus: str
    out: str
    dims: int = Field(default=4096, ge=1)


class ResultOut(BaseModel):
    url: str
    title: str
    content: str
    sentences: list[str]
    news: bool = False


class SearchResponse(BaseModel):
    query: str
    augment_news: bool
    engine_id: str
    results: list[ResultOut]


class SessionCreated(BaseModel):
    session_id: str
    role: str
    persona_options: dict


class ErrorBody(BaseModel):
    code: str
    message: str
