"""HTTP service: retrieval, answering, and a two-stage quiz protocol.

The quiz flow mirrors a study session. A participant first answers 20
sampled questions cold (pretest: lettered options, no reference material
anywhere in the payloads), then answers the same questions again with a
generated reference paragraph in view and free-text answers (posttest).
Both submissions are scored server-side, 5 points per question.

Sessions live in an append-only JSONL store. Every mutation is written
and flushed before it is applied in memory or acknowledged, so restarting
the process replays the log and lands in the same state.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Any

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .embedding import EmbedderSpec, build_embedder
from .evaluation import (
    POINTS_PER_QUESTION,
    QUIZ_LENGTH,
    EvalDataset,
    load_ttqa,
    quiz_score,
)
from .index import load as load_index
from .llm import GenerationParams, LlmClientSpec, build_llm_client
from .pipeline import ChunkStore, McqQuestion, PipelineConfig, RagPipeline
from .remote import EndpointProfile, TransportError
from .rerank import LexicalOverlapScorer, RemoteReranker

STAGE_PRETEST = "pretest"
STAGE_POSTTEST = "posttest"
STAGE_COMPLETED = "completed"


@dataclass
class ServiceConfig:
    """Everything the service needs, loadable from a JSON file.

    Environment variables override the secrets so tokens never need to
    live in the file: LOCALRAG_EMBED_TOKEN, LOCALRAG_RERANK_TOKEN,
    LOCALRAG_LLM_TOKEN, plus LOCALRAG_HOST and LOCALRAG_PORT.
    """

    index_path: str
    chunk_archive_path: str
    question_pool_path: str
    session_store_path: str
    request_log_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8080
    n_retrieve: int = 20
    n_context: int = 5
    quiz_seed: int | None = None
    embedder: dict = field(default_factory=lambda: {"backend": "hashed_ngram"})
    reranker: dict = field(default_factory=lambda: {"backend": "lexical"})
    llm: dict = field(default_factory=lambda: {"backend": "scripted_mock"})

    @classmethod
    def load(
        cls,
        path: Path | str,
        env: dict[str, str] | None = None,
    ) -> "ServiceConfig":
        env = dict(os.environ if env is None else env)
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        config = cls(**data)
        if "LOCALRAG_HOST" in env:
            config.host = env["LOCALRAG_HOST"]
        if "LOCALRAG_PORT" in env:
            config.port = int(env["LOCALRAG_PORT"])
        for section, var in (
            (config.embedder, "LOCALRAG_EMBED_TOKEN"),
            (config.reranker, "LOCALRAG_RERANK_TOKEN"),
            (config.llm, "LOCALRAG_LLM_TOKEN"),
        ):
            if var in env and "endpoint" in section:
                section["endpoint"]["auth_token"] = env[var]
        return config


def _endpoint_from(section: dict) -> EndpointProfile | None:
    raw = section.get("endpoint")
    return EndpointProfile.from_dict(raw) if raw else None


def build_pipeline(config: ServiceConfig) -> RagPipeline:
    """Assemble the pipeline the config describes."""
    index = load_index(config.index_path)
    chunk_store = ChunkStore.from_archive(config.chunk_archive_path)

    spec = EmbedderSpec(
        dims=int(config.embedder.get("dims", index.config.dims)),
        max_input_tokens=int(config.embedder.get("max_input_tokens", 8192)),
        backend=config.embedder.get("backend", "hashed_ngram"),
    )
    if spec.dims != index.config.dims:
        raise ValueError(
            f"embedder dims {spec.dims} do not match index dims "
            f"{index.config.dims}"
        )
    embedder = build_embedder(spec, _endpoint_from(config.embedder))

    if config.reranker.get("backend", "lexical") == "remote":
        endpoint = _endpoint_from(config.reranker)
        if endpoint is None:
            raise ValueError("remote reranker needs an endpoint")
        scorer = RemoteReranker(endpoint)
    else:
        scorer = LexicalOverlapScorer()

    llm_spec = LlmClientSpec(
        backend=config.llm.get("backend", "scripted_mock"),
        model=config.llm.get("model", ""),
        endpoint=_endpoint_from(config.llm),
        fixture_path=config.llm.get("fixture_path"),
        params=GenerationParams(
            max_output_tokens=int(config.llm.get("max_output_tokens", 512)),
            temperature=float(config.llm.get("temperature", 0.0)),
        ),
    )
    llm = build_llm_client(llm_spec)

    return RagPipeline(
        index=index,
        chunk_store=chunk_store,
        embedder=embedder,
        scorer=scorer,
        llm=llm,
        config=PipelineConfig(
            n_retrieve=config.n_retrieve, n_context=config.n_context
        ),
    )


@dataclass
class QuizSession:
    session_id: str
    participant_id: str
    seed: int
    question_ids: list[str]
    stage: str = STAGE_PRETEST
    pretest: dict | None = None
    posttest: dict | None = None
    references: dict[str, dict] = field(default_factory=dict)

    def scores(self) -> dict[str, int | None]:
        return {
            STAGE_PRETEST: self.pretest["score"] if self.pretest else None,
            STAGE_POSTTEST: self.posttest["score"] if self.posttest else None,
        }


class SessionStore:
    """Append-only JSONL session log with full in-memory state.

    Records are written and flushed to disk before the in-memory state
    changes, so a crash can lose at most an unacknowledged request. On
    construction the log is replayed from the top.
    """

    def __init__(self, path: Path | str | None):
        self.path = Path(path) if path is not None else None
        self.sessions: dict[str, QuizSession] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._apply(json.loads(line))

    def _apply(self, record: dict) -> None:
        op = record["op"]
        if op == "create":
            data = record["session"]
            session = QuizSession(
                session_id=data["session_id"],
                participant_id=data["participant_id"],
                seed=data["seed"],
                question_ids=list(data["question_ids"]),
            )
            self.sessions[session.session_id] = session
        elif op == "submit":
            session = self.sessions[record["session_id"]]
            entry = {
                "responses": record["responses"],
                "predicted": record["predicted"],
                "score": record["score"],
                "submitted_at": record["submitted_at"],
            }
            if record["stage"] == STAGE_PRETEST:
                session.pretest = entry
                session.stage = STAGE_POSTTEST
            else:
                session.posttest = entry
                session.stage = STAGE_COMPLETED
        elif op == "reference":
            session = self.sessions[record["session_id"]]
            session.references[record["question_id"]] = record["reference"]
        else:
            raise ValueError(f"unknown session record op {op!r}")

    def _append(self, record: dict) -> None:
        if self.path is None:
            self._apply(record)
            return
        line = json.dumps(record, ensure_ascii=False, sort_keys=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._apply(record)

    def get(self, session_id: str) -> QuizSession | None:
        return self.sessions.get(session_id)

    def create(
        self,
        participant_id: str,
        seed: int,
        question_ids: list[str],
    ) -> QuizSession:
        with self._lock:
            session_id = uuid.uuid4().hex
            self._append(
                {
                    "op": "create",
                    "session": {
                        "session_id": session_id,
                        "participant_id": participant_id,
                        "seed": seed,
                        "question_ids": question_ids,
                    },
                }
            )
            return self.sessions[session_id]

    def record_submit(
        self,
        session_id: str,
        stage: str,
        responses: dict[str, str],
        predicted: dict[str, str],
        score: int,
    ) -> None:
        with self._lock:
            self._append(
                {
                    "op": "submit",
                    "session_id": session_id,
                    "stage": stage,
                    "responses": responses,
                    "predicted": predicted,
                    "score": score,
                    "submitted_at": time.time(),
                }
            )

    def record_reference(
        self, session_id: str, question_id: str, reference: dict
    ) -> None:
        with self._lock:
            self._append(
                {
                    "op": "reference",
                    "session_id": session_id,
                    "question_id": question_id,
                    "reference": reference,
                }
            )


class QueryRequest(BaseModel):
    text: str = Field(min_length=1)
    k: int = Field(default=5, ge=1)


class OptionModel(BaseModel):
    label: str
    text: str


class QuestionModel(BaseModel):
    question_id: str
    stem: str
    options: list[OptionModel]
    topic: str = ""
    gold_label: str | None = None


class AnswerRequest(BaseModel):
    question: QuestionModel
    mode: str = "labeled"
    use_rag: bool = True


class CreateSessionRequest(BaseModel):
    participant_id: str = Field(min_length=1)
    seed: int | None = None


class SubmitRequest(BaseModel):
    stage: str
    responses: dict[str, str]


def _http_error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(
        status_code=status, detail={"code": code, "message": message}
    )


def _session_or_404(store: SessionStore, session_id: str) -> QuizSession:
    session = store.get(session_id)
    if session is None:
        raise _http_error(404, "not_found", f"no session {session_id!r}")
    return session


def _sample_question_ids(pool: EvalDataset, seed: int) -> list[str]:
    ids = [q.question_id for q in pool.questions]
    return Random(seed).sample(ids, QUIZ_LENGTH)


def create_app(
    config: ServiceConfig | None = None,
    *,
    pipeline: RagPipeline | None = None,
    question_pool: EvalDataset | None = None,
    store: SessionStore | None = None,
) -> FastAPI:
    """Build the application. Components can be injected for testing."""
    if pipeline is None:
        if config is None:
            raise ValueError("create_app needs a config or a pipeline")
        pipeline = build_pipeline(config)
    if question_pool is None:
        if config is None:
            raise ValueError("create_app needs a config or a question pool")
        question_pool = load_ttqa(config.question_pool_path)
    if store is None:
        store = SessionStore(config.session_store_path if config else None)
    if len(question_pool.questions) < QUIZ_LENGTH:
        raise ValueError(
            f"question pool has {len(question_pool.questions)} questions, "
            f"needs at least {QUIZ_LENGTH}"
        )

    pool_by_id = question_pool.by_id()
    default_seed = config.quiz_seed if config else None
    log_path = config.request_log_path if config else None

    app = FastAPI(title="localrag", version="1")
    app.state.pipeline = pipeline
    app.state.store = store
    app.state.question_pool = question_pool

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "error": {
                    "code": "invalid_request",
                    "message": "request failed validation",
                    "detail": exc.errors(),
                }
            },
        )

    @app.exception_handler(HTTPException)
    async def _http_handler(request: Request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"code": "error", "message": str(detail)}
        return JSONResponse(status_code=exc.status_code, content={"error": detail})

    @app.exception_handler(TransportError)
    async def _transport_handler(request: Request, exc: TransportError):
        return JSONResponse(
            status_code=502,
            content={
                "error": {
                    "code": "upstream_failure",
                    "message": str(exc),
                    "retryable": exc.retryable,
                }
            },
        )

    if log_path:

        @app.middleware("http")
        async def _request_logger(request: Request, call_next):
            started = time.time()
            response = await call_next(request)
            record = {
                "ts": started,
                "method": request.method,
                "path": request.url.path,
                "status": response.status_code,
                "duration_ms": round((time.time() - started) * 1000.0, 3),
            }
            with open(log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
            return response

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "index_size": len(pipeline.index),
            "chunks": len(pipeline.chunk_store),
        }

    @app.post("/v1/query")
    def query(body: QueryRequest) -> dict:
        if not body.text.strip():
            raise _http_error(422, "invalid_request", "text is blank")
        passages = pipeline.retrieve(
            body.text,
            n_retrieve=max(body.k, pipeline.config.n_retrieve),
            n_context=body.k,
        )
        return {"hits": [p.to_dict() for p in passages]}

    @app.post("/v1/answer")
    def answer(body: AnswerRequest):
        try:
            question = McqQuestion.from_dict(body.question.model_dump())
        except ValueError as exc:
            raise _http_error(422, "invalid_question", str(exc))
        if body.mode not in ("labeled", "freeform_refined"):
            raise _http_error(422, "invalid_request", f"unknown mode {body.mode!r}")
        try:
            result = pipeline.answer_mcq(
                question, mode=body.mode, use_rag=body.use_rag
            )
        except (TransportError, KeyError) as exc:
            raise _http_error(502, "upstream_failure", str(exc))
        return JSONResponse(content=result.to_dict())

    @app.post("/v1/quiz/sessions", status_code=201)
    def create_session(body: CreateSessionRequest) -> dict:
        if body.seed is not None:
            seed = body.seed
        elif default_seed is not None:
            seed = default_seed
        else:
            seed = secrets.randbits(32)
        session = store.create(
            participant_id=body.participant_id,
            seed=seed,
            question_ids=_sample_question_ids(question_pool, seed),
        )
        return _session_snapshot(session)

    @app.get("/v1/quiz/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return _session_snapshot(_session_or_404(store, session_id))

    @app.get("/v1/quiz/sessions/{session_id}/questions")
    def get_questions(session_id: str) -> dict:
        session = _session_or_404(store, session_id)
        if session.stage == STAGE_PRETEST:
            questions = [
                {
                    "question_id": qid,
                    "stem": pool_by_id[qid].stem,
                    "options": [o.to_dict() for o in pool_by_id[qid].options],
                }
                for qid in session.question_ids
            ]
            return {"stage": STAGE_PRETEST, "questions": questions}
        questions = []
        for qid in session.question_ids:
            questions.append(
                {
                    "question_id": qid,
                    "stem": pool_by_id[qid].stem,
                    "reference": _reference_for(session, qid),
                }
            )
        return {"stage": session.stage, "questions": questions}

    @app.get("/v1/quiz/sessions/{session_id}/reference/{question_id}")
    def get_reference(session_id: str, question_id: str) -> dict:
        session = _session_or_404(store, session_id)
        if question_id not in set(session.question_ids):
            raise _http_error(
                404, "not_found", f"question {question_id!r} not in session"
            )
        if session.stage == STAGE_PRETEST:
            raise _http_error(
                409,
                "wrong_stage",
                "reference material is not available during the pretest",
            )
        return {
            "question_id": question_id,
            "reference": _reference_for(session, question_id),
        }

    def _reference_for(session: QuizSession, question_id: str) -> dict:
        cached = session.references.get(question_id)
        if cached is not None:
            return cached
        reference = pipeline.generate_reference(pool_by_id[question_id].stem)
        store.record_reference(
            session.session_id, question_id, reference.to_dict()
        )
        return session.references[question_id]

    @app.post("/v1/quiz/sessions/{session_id}/responses")
    def submit(session_id: str, body: SubmitRequest) -> dict:
        session = _session_or_404(store, session_id)
        if body.stage not in (STAGE_PRETEST, STAGE_POSTTEST):
            raise _http_error(
                422, "invalid_request", f"unknown stage {body.stage!r}"
            )
        if session.stage == STAGE_COMPLETED:
            raise _http_error(
                409, "wrong_stage", "session is already completed"
            )
        if body.stage != session.stage:
            raise _http_error(
                409,
                "wrong_stage",
                f"session is in stage {session.stage!r}, "
                f"got a {body.stage!r} submission",
            )
        question_ids = set(session.question_ids)
        unknown = sorted(set(body.responses) - question_ids)
        if unknown:
            raise _http_error(
                400,
                "invalid_request",
                f"responses for questions outside the session: {unknown}",
            )

        predicted: dict[str, str] = {}
        for qid, value in body.responses.items():
            question = pool_by_id[qid]
            if body.stage == STAGE_PRETEST:
                if value not in question.labels:
                    raise _http_error(
                        400,
                        "invalid_request",
                        f"{qid}: {value!r} is not one of {question.labels}",
                    )
                predicted[qid] = value
            else:
                text = value.strip()
                if not text:
                    raise _http_error(
                        400, "invalid_request", f"{qid}: empty answer text"
                    )
                if text in question.labels:
                    predicted[qid] = text
                else:
                    label, _sims = pipeline.extract_label(text, question)
                    predicted[qid] = label

        answer_key = {
            qid: pool_by_id[qid].gold_label for qid in session.question_ids
        }
        score = quiz_score(predicted, answer_key)
        store.record_submit(
            session_id, body.stage, dict(body.responses), predicted, score
        )
        session = _session_or_404(store, session_id)
        return {
            "session_id": session_id,
            "stage": body.stage,
            "score": score,
            "correct_count": score // POINTS_PER_QUESTION,
            "max_score": QUIZ_LENGTH * POINTS_PER_QUESTION,
            "next_stage": session.stage,
        }

    @app.get("/v1/quiz/sessions/{session_id}/results")
    def results(session_id: str) -> dict:
        session = _session_or_404(store, session_id)
        return {
            "session_id": session.session_id,
            "participant_id": session.participant_id,
            "stage": session.stage,
            "scores": session.scores(),
            "pretest": session.pretest,
            "posttest": session.posttest,
        }

    def _session_snapshot(session: QuizSession) -> dict:
        return {
            "session_id": session.session_id,
            "participant_id": session.participant_id,
            "seed": session.seed,
            "stage": session.stage,
            "question_ids": list(session.question_ids),
            "scores": session.scores(),
        }

    return app
