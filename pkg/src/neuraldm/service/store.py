"""Session bookkeeping, append-only logs, and the rating-consistency filter."""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np

from ..actions import MasterAction
from ..database import VenueDatabase
from ..dialogue import SUCCESS_BONUS, TURN_PENALTY
from ..engine import ChatEngine, EngineTurn
from ..exceptions import DataError
from ..ontology import DONTCARE, Ontology
from ..rl import Episode
from ..simulator import SystemTurn, success_judge, UserGoal

# Constraint evidence below this confidence (e.g. spread counter-evidence)
# does not define the user's declared goal.
_GOAL_CONFIDENCE = 0.4


@dataclass
class Session:
    id: str
    engine: ChatEngine
    created: float
    last_active: float
    rated: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def status(self) -> str:
        return "closed" if self.engine.closed else "open"


class LogWriter:
    """Serialized append-only JSONL writer."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True))
                fh.write("\n")


class SessionStore:
    def __init__(self, capacity: int = 256):
        self.capacity = capacity
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, engine: ChatEngine) -> Session:
        with self._lock:
            open_count = sum(1 for s in self._sessions.values() if s.status == "open")
            if open_count >= self.capacity:
                raise CapacityError(f"session capacity {self.capacity} exceeded")
            session = Session(
                id=uuid.uuid4().hex, engine=engine,
                created=time.time(), last_active=time.time(),
            )
            self._sessions[session.id] = session
            return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def open_count(self) -> int:
        with self._lock:
            return sum(1 for s in self._sessions.values() if s.status == "open")


class CapacityError(Exception):
    pass


def turn_record(session_id: str, turn_index: int, turn: EngineTurn) -> dict:
    return {
        "kind": "turn",
        "session": session_id,
        "turn": turn_index,
        "user_text": turn.user_text,
        "acts": [
            {"act": h.act_type, "slot": h.slot, "value": h.value, "confidence": h.confidence}
            for h in turn.hypotheses
        ],
        "action": {
            "dia_act": turn.system.action.dia_act,
            "query_slot": turn.system.action.query_slot,
            "offer_bits": list(turn.system.action.offer_bits),
        },
        "venue_id": turn.system.venue.id if turn.system.venue else None,
        "features": turn.features.tolist(),
    }


def rating_record(session_id: str, success: bool, quality: int) -> dict:
    return {"kind": "rating", "session": session_id, "success": success, "quality": quality}


def _load_jsonl(path: str) -> list[dict]:
    records = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}: malformed record at line {lineno}") from exc
    except FileNotFoundError:
        return []
    return records


def derive_goal(turns: list[dict], ontology: Ontology) -> tuple[dict[str, str], tuple[str, ...]]:
    """The goal the user declared through decoded acts: last confident
    constraint per slot, plus every requested slot."""
    constraints: dict[str, str] = {}
    requests: list[str] = []
    for record in turns:
        for act in record["acts"]:
            slot = act.get("slot")
            if (
                act["act"] in ("inform", "affirm")
                and slot in ontology.informable_slots
                and act.get("value") is not None
                and act.get("confidence", 0.0) >= _GOAL_CONFIDENCE
            ):
                constraints[slot] = act["value"]
            elif act["act"] == "request" and slot in ontology.requestable_slots:
                if slot not in requests:
                    requests.append(slot)
    return constraints, tuple(requests)


def _rebuild_system_turns(
    turns: list[dict], db: VenueDatabase
) -> list[SystemTurn]:
    by_id = {v.id: v for v in db.venues}
    out = []
    for record in turns:
        action = MasterAction(
            dia_act=record["action"]["dia_act"],
            query_slot=record["action"]["query_slot"],
            offer_bits=tuple(bool(b) for b in record["action"]["offer_bits"]),
        )
        venue = by_id.get(record["venue_id"]) if record["venue_id"] is not None else None
        out.append(SystemTurn(action=action, venue=venue))
    return out


def consistent_dialogues(
    session_log: str,
    rating_log: str,
    db: VenueDatabase,
    ontology: Ontology,
) -> list[Episode]:
    """Episodes from rated sessions whose objective success check agrees with
    the user's binary rating.

    The objective check judges the transcript against the goal the user
    declared through the decoded constraints; dialogues with no usable
    declared constraints cannot be checked and are excluded. Replaying the
    same logs reconstructs identical output.
    """
    turns_by_session: dict[str, list[dict]] = {}
    for record in _load_jsonl(session_log):
        if record.get("kind") == "turn":
            turns_by_session.setdefault(record["session"], []).append(record)
    ratings: dict[str, bool] = {}
    for record in _load_jsonl(rating_log):
        if record.get("kind") == "rating" and record["session"] not in ratings:
            ratings[record["session"]] = bool(record["success"])

    episodes = []
    for session_id in sorted(ratings):
        turns = sorted(turns_by_session.get(session_id, []), key=lambda r: r["turn"])
        if not turns:
            continue
        constraints, requests = derive_goal(turns, ontology)
        if not any(v != DONTCARE for v in constraints.values()):
            continue
        system_turns = _rebuild_system_turns(turns, db)
        goal = UserGoal(
            constraints=tuple(
                (s, constraints.get(s, DONTCARE)) for s in ontology.informable_slots
            ),
            requests=requests or ("phone",),
        )
        # With no decoded requests the request-coverage clause must not fail
        # the check; judge constraints only in that case.
        if requests:
            objective = success_judge(ontology, goal, system_turns)
        else:
            objective = _constraints_satisfied(goal, system_turns)
        if objective != ratings[session_id]:
            continue
        steps = []
        for i, record in enumerate(turns):
            reward = TURN_PENALTY
            if i == len(turns) - 1 and objective:
                reward += SUCCESS_BONUS
            steps.append(
                (np.array(record["features"], dtype=float), system_turns[i].action, reward)
            )
        episodes.append(Episode.from_steps(steps, success=objective))
    return episodes


def _constraints_satisfied(goal: UserGoal, system_turns: list[SystemTurn]) -> bool:
    wanted = [(s, v) for s, v in goal.constraints if v != DONTCARE]
    for turn in system_turns:
        if turn.action.dia_act == "offer" and turn.venue is not None:
            if all(getattr(turn.venue, s) == v for s, v in wanted):
                return True
    return False
