"""Pydantic request/response models for the dialogue service."""

from __future__ import annotations

from pydantic import BaseModel

API_VERSION = "1"


class CreateSessionResponse(BaseModel):
    session_id: str
    greeting: str
    api_version: str = API_VERSION


class SessionInfoResponse(BaseModel):
    session_id: str
    status: str  # "open" | "closed"
    turns: int
    rated: bool


class UtteranceRequest(BaseModel):
    text: str


class MasterActionModel(BaseModel):
    dia_act: str
    query_slot: str
    offer_bits: list[bool]


class SlotSummaryModel(BaseModel):
    top_value: str
    probability: float


class BeliefSummaryModel(BaseModel):
    slots: dict[str, SlotSummaryModel]
    requested: list[str]
    matched_count: int | None
    turn: int


class UtteranceResponse(BaseModel):
    system_text: str
    master_action: MasterActionModel
    belief_summary: BeliefSummaryModel
    closed: bool
    turn: int


class RatingRequest(BaseModel):
    success: bool
    quality: int


class RatingResponse(BaseModel):
    stored: bool


class HealthResponse(BaseModel):
    status: str
    api_version: str = API_VERSION
    open_sessions: int
