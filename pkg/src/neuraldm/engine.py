"""Text-level dialogue session: decoder -> tracker -> policy -> templates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nlg
from .actions import MasterAction
from .belief import MAX_TURNS, UserActHypothesis
from .database import VenueDatabase
from .decoder import DecoderContext, TextDecoder
from .dialogue import DialogueManager
from .exceptions import DataError
from .ontology import Ontology
from .policy import PolicyParams, forward, select_action
from .simulator import SystemTurn


@dataclass(frozen=True)
class EngineTurn:
    user_text: str
    hypotheses: tuple[UserActHypothesis, ...]
    system: SystemTurn
    system_text: str
    features: np.ndarray


@dataclass
class StepResult:
    system_text: str
    system: SystemTurn
    belief_summary: dict
    closed: bool
    turn: int


@dataclass
class ChatEngine:
    """One typed-chat dialogue against a trained policy.

    The engine is the single dialogue loop behind both the HTTP service and
    the terminal chat command. Policy decisions are greedy; the session
    closes on a bye from either side or at the turn cap.
    """

    params: PolicyParams
    db: VenueDatabase
    ontology: Ontology
    max_turns: int = MAX_TURNS
    closed: bool = False
    turns: list[EngineTurn] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._dm = DialogueManager(self.ontology, self.db, self.max_turns)
        self._decoder = TextDecoder(self.ontology)
        self._last_system: SystemTurn | None = None

    def greeting(self) -> str:
        return nlg.GREETING

    def step(self, text: str) -> StepResult:
        """Process one user utterance and produce the system reply."""
        if self.closed:
            raise DataError("session is closed")
        if not text.strip():
            raise DataError("empty utterance")

        hyps = self._decoder.decode(text, DecoderContext(last_system=self._last_system))
        self._dm.observe(hyps)
        features = self._dm.features()

        action = select_action(forward(self.params, features), mode="greedy")
        user_bye = any(h.act_type == "bye" for h in hyps)
        at_cap = self._dm.state.turn >= self.max_turns
        if (user_bye or at_cap) and action.dia_act != "bye":
            action = MasterAction("bye")

        system = self._dm.realize(action)
        system_text = nlg.render(self.ontology, system)
        self._last_system = system
        self.turns.append(
            EngineTurn(
                user_text=text,
                hypotheses=tuple(hyps),
                system=system,
                system_text=system_text,
                features=features,
            )
        )
        if action.dia_act == "bye":
            self.closed = True
        return StepResult(
            system_text=system_text,
            system=system,
            belief_summary=self.belief_summary(),
            closed=self.closed,
            turn=len(self.turns),
        )

    def belief_summary(self) -> dict:
        state = self._dm.state
        slots = {}
        for slot in self.ontology.informable_slots:
            value, prob = state.top_value(self.ontology, slot)
            slots[slot] = {"top_value": value, "probability": round(prob, 4)}
        return {
            "slots": slots,
            "requested": sorted(state.requested),
            "matched_count": state.matched_count,
            "turn": state.turn,
        }
