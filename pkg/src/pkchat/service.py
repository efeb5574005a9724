"""Runtime flow: per-session state, topic-switch gating, keyword extraction,
knowledge-graph retrieval, and generation — behind an HTTP API.

Sessions are held in memory. Per-session processing is serialized with a
lock; the model and graph are shared immutably across sessions.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .keywords.crf import CrfModel, crf_tag, tags_to_candidates
from .keywords.extract import (
    Candidate,
    CorpusStats,
    resolve_entity,
    rule_extract,
    textrank,
    tfidf_rank,
)
from .kg import EntityIndex, TripleStore, linearize
from .model.generate import DecodeConfig, GenerationResult, generate
from .model.network import DialogueModel
from .textpipe.corpus import Utterance
from .textpipe.tokenizer import tokenize

DEFAULT_TAU = 0.5


@dataclass
class Session:
    id: str
    history: list[Utterance] = field(default_factory=list)
    active_entity: str | None = None
    active_knowledge: list[str] = field(default_factory=list)
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    switch_log: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "history": [{"role": t.role, "text": t.text} for t in self.history],
            "active_entity": self.active_entity,
            "active_knowledge": list(self.active_knowledge),
            "created": self.created,
            "updated": self.updated,
            "switch_log": [dict(e) for e in self.switch_log],
        }


@dataclass
class TurnResult:
    response: str
    tokens: list[dict]
    topic_switched: bool
    ts_score: float
    entity: str | None
    knowledge: list[str]
    fallback: bool


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self) -> Session:
        session = Session(id=uuid.uuid4().hex)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def all(self) -> list[Session]:
        with self._lock:
            return list(self._sessions.values())


class Orchestrator:
    """Gate on the topic-match score, re-retrieve knowledge when it drops,
    then generate with the pointer-guided decoder."""

    def __init__(self, model: DialogueModel, kg: TripleStore,
                 crf: CrfModel | None = None,
                 corpus_stats: CorpusStats | None = None,
                 tau: float = DEFAULT_TAU,
                 decode: DecodeConfig | None = None,
                 checkpoint_path: str = ""):
        self.model = model
        self.kg = kg
        self.entity_index = EntityIndex(kg)
        self.crf = crf
        self.corpus_stats = corpus_stats
        self.tau = tau
        self.decode = decode or DecodeConfig(
            max_length=model.config.max_response)
        self.checkpoint_path = checkpoint_path

    def extract_candidates(self, tokens: list[str]) -> list[Candidate]:
        candidates = list(rule_extract(tokens))
        candidates.extend(textrank(tokens, top_k=3))
        if self.corpus_stats is not None and self.corpus_stats.n_docs:
            candidates.extend(tfidf_rank(tokens, self.corpus_stats, top_k=3))
        if self.crf is not None:
            candidates.extend(tags_to_candidates(tokens, crf_tag(tokens, self.crf)))
        return candidates

    def handle_message(self, session: Session, text: str) -> TurnResult:
        tokens = tokenize(text)
        if not tokens:
            raise ValueError("empty message")

        if session.active_knowledge:
            ts_score = self.model.topic_switch_score(
                session.active_knowledge, session.history, tokens)
        else:
            ts_score = 0.0

        switched = False
        fallback = False
        entity = session.active_entity
        if ts_score < self.tau or not session.active_knowledge:
            resolved = resolve_entity(self.extract_candidates(tokens),
                                      self.entity_index)
            if resolved is not None:
                old = session.active_entity
                session.active_entity = resolved
                session.active_knowledge = linearize(
                    self.kg.neighborhood(resolved), resolved)
                session.switch_log.append({
                    "turn": len(session.history) // 2,
                    "old_entity": old,
                    "new_entity": resolved,
                    "score": ts_score,
                })
                switched = True
                entity = resolved
            else:
                fallback = True

        user_turn = Utterance("user", text)
        result: GenerationResult = generate(
            self.model, session.history + [user_turn],
            session.active_knowledge, self.decode)
        response_text = result.text if result.tokens else "..."

        session.history.append(user_turn)
        session.history.append(Utterance("bot", response_text))
        session.updated = time.time()

        return TurnResult(
            response=response_text,
            tokens=[{"text": a.text, "source": a.source,
                     "copy_index": a.copy_index} for a in result.attributions],
            topic_switched=switched,
            ts_score=ts_score,
            entity=entity,
            knowledge=list(session.active_knowledge),
            fallback=fallback,
        )


def create_app(orchestrator: Orchestrator, store: SessionStore | None = None) -> FastAPI:
    store = store or SessionStore()
    app = FastAPI(title="pkchat")
    app.state.store = store
    app.state.orchestrator = orchestrator

    @app.post("/api/sessions", status_code=201)
    def create_session():
        return {"id": store.create().id}

    @app.get("/api/health")
    def health():
        return {"status": "ok",
                "checkpoint": orchestrator.checkpoint_path,
                "kg_size": len(orchestrator.kg)}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            return store.get(session_id).snapshot()
        except KeyError:
            return JSONResponse({"detail": "unknown session"}, status_code=404)

    @app.post("/api/sessions/{session_id}/messages")
    async def post_message(session_id: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"detail": "malformed JSON body"}, status_code=400)
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            return JSONResponse({"detail": "body must be {\"text\": string}"},
                                status_code=400)
        if not body["text"].strip():
            return JSONResponse({"detail": "text is empty"}, status_code=422)
        try:
            session = store.get(session_id)
        except KeyError:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        with session.lock:
            result = orchestrator.handle_message(session, body["text"])
        return {
            "response": result.response,
            "tokens": result.tokens,
            "topic_switched": result.topic_switched,
            "ts_score": result.ts_score,
            "entity": result.entity,
            "knowledge": result.knowledge,
            "fallback": result.fallback,
        }

    return app
