"""FastAPI application exposing turn-level dialogue over HTTP."""

from __future__ import annotations

import os
import time

from fastapi import FastAPI, Header, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles

from ..database import VenueDatabase
from ..engine import ChatEngine
from ..exceptions import DataError
from ..ontology import Ontology
from ..policy import PolicyParams
from .schemas import (
    BeliefSummaryModel,
    CreateSessionResponse,
    HealthResponse,
    MasterActionModel,
    RatingRequest,
    RatingResponse,
    SessionInfoResponse,
    SlotSummaryModel,
    UtteranceRequest,
    UtteranceResponse,
)
from .store import (
    CapacityError,
    LogWriter,
    SessionStore,
    rating_record,
    turn_record,
)


def create_app(
    params: PolicyParams,
    db: VenueDatabase,
    ontology: Ontology,
    log_dir: str = ".",
    capacity: int = 256,
    rating_token: str | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    """Build the service around a fixed policy checkpoint.

    The model parameters are read-only while serving; human-in-the-loop
    updates run offline from the logs this service writes.
    """
    app = FastAPI(title="neuraldm dialogue service", version="1")
    store = SessionStore(capacity=capacity)
    os.makedirs(log_dir, exist_ok=True)
    session_log = LogWriter(os.path.join(log_dir, "sessions.jsonl"))
    rating_log = LogWriter(os.path.join(log_dir, "ratings.jsonl"))

    def get_session(session_id: str):
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", open_sessions=store.open_count())

    @app.post("/session", response_model=CreateSessionResponse)
    def create_session() -> CreateSessionResponse:
        engine = ChatEngine(params=params, db=db, ontology=ontology)
        try:
            session = store.create(engine)
        except CapacityError as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        return CreateSessionResponse(session_id=session.id, greeting=engine.greeting())

    @app.get("/session/{session_id}", response_model=SessionInfoResponse)
    def session_info(session_id: str) -> SessionInfoResponse:
        session = get_session(session_id)
        return SessionInfoResponse(
            session_id=session.id,
            status=session.status,
            turns=len(session.engine.turns),
            rated=session.rated,
        )

    @app.post("/session/{session_id}/utterance", response_model=UtteranceResponse)
    def utterance(session_id: str, body: UtteranceRequest) -> UtteranceResponse:
        session = get_session(session_id)
        if not body.text.strip():
            raise HTTPException(status_code=400, detail="empty utterance")
        with session.lock:
            if session.engine.closed:
                raise HTTPException(status_code=409, detail="session is closed")
            try:
                result = session.engine.step(body.text)
            except DataError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            session.last_active = time.time()
            session_log.append(
                turn_record(session.id, len(session.engine.turns) - 1, session.engine.turns[-1])
            )
        summary = result.belief_summary
        return UtteranceResponse(
            system_text=result.system_text,
            master_action=MasterActionModel(
                dia_act=result.system.action.dia_act,
                query_slot=result.system.action.query_slot,
                offer_bits=list(result.system.action.offer_bits),
            ),
            belief_summary=BeliefSummaryModel(
                slots={
                    s: SlotSummaryModel(**v) for s, v in summary["slots"].items()
                },
                requested=summary["requested"],
                matched_count=summary["matched_count"],
                turn=summary["turn"],
            ),
            closed=result.closed,
            turn=result.turn,
        )

    @app.post("/session/{session_id}/rating", response_model=RatingResponse)
    def rate(
        session_id: str,
        body: RatingRequest,
        authorization: str | None = Header(default=None),
    ) -> RatingResponse:
        if rating_token is not None and authorization != f"Bearer {rating_token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")
        session = get_session(session_id)
        if not 0 <= body.quality <= 5:
            raise HTTPException(status_code=400, detail="quality must be in 0..5")
        with session.lock:
            if session.status != "closed":
                raise HTTPException(status_code=409, detail="session is still open")
            if session.rated:
                raise HTTPException(status_code=409, detail="session already rated")
            session.rated = True
            rating_log.append(rating_record(session.id, body.success, body.quality))
        return RatingResponse(stored=True)

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index() -> FileResponse:
            return FileResponse(os.path.join(ui_dir, "index.html"))

    return app
