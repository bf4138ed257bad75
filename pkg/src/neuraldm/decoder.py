"""Rule-based text-to-semantics decoder for typed chat input.

Case-insensitive keyword matching over ontology values plus a small synonym
table. Typed input has no recognition noise, so every matched act carries a
fixed confidence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .belief import UserActHypothesis
from .ontology import DONTCARE, Ontology
from .simulator import SystemTurn

DECODER_CONFIDENCE = 0.9

_VALUE_SYNONYMS = {
    "center": ("area", "centre"),
    "central": ("area", "centre"),
    "inexpensive": ("pricerange", "cheap"),
    "budget": ("pricerange", "cheap"),
    "moderately": ("pricerange", "moderate"),
    "mid": ("pricerange", "moderate"),
    "pricey": ("pricerange", "expensive"),
    "upmarket": ("pricerange", "expensive"),
}

_REQUEST_PATTERNS = (
    ("postcode", re.compile(r"\b(postcode|post code|zip)\b")),
    ("phone", re.compile(r"\b(phone|telephone|number)\b")),
    ("address", re.compile(r"\b(address|where is|located|location)\b")),
)

_DONTCARE_RE = re.compile(
    r"\b(dont care|don't care|do not care|doesnt matter|doesn't matter|any|anything|whatever)\b"
)
_AFFIRM_RE = re.compile(r"\b(yes|yeah|yep|right|correct|sure)\b")
_NEGATE_RE = re.compile(r"\b(no|nope|wrong|not right)\b")
_BYE_RE = re.compile(r"\b(bye|goodbye|good bye|that'?s all|thank you, bye)\b")
_REQALTS_RE = re.compile(r"\b(anything else|something else|other options?|alternatives?|another one)\b")


@dataclass(frozen=True)
class DecoderContext:
    """What the system just did, for resolving context-dependent phrases."""

    last_system: SystemTurn | None = None

    @property
    def focus_slot(self) -> str | None:
        if self.last_system is None:
            return None
        action = self.last_system.action
        if action.query_slot != "none":
            return action.query_slot
        return None

    @property
    def confirmed_value(self) -> str | None:
        if self.last_system is None:
            return None
        if self.last_system.action.dia_act == "confirm":
            return self.last_system.confirm_value
        return None


class TextDecoder:
    def __init__(self, ontology: Ontology, confidence: float = DECODER_CONFIDENCE):
        self.ontology = ontology
        self.confidence = confidence
        self._value_to_slot: dict[str, str] = {}
        for slot in ontology.informable_slots:
            for value in ontology.values[slot]:
                if value != DONTCARE:
                    self._value_to_slot[value] = slot

    def decode(self, text: str, context: DecoderContext | None = None) -> list[UserActHypothesis]:
        """Decode one typed utterance into confidence-scored hypotheses.

        Returns a single null act when nothing matches. A bare "no" after a
        confirm becomes counter-evidence spread over the slot's other values,
        which keeps the focus tracker's update rule applicable.
        """
        context = context or DecoderContext()
        lowered = text.lower()
        acts: list[UserActHypothesis] = []
        informed: dict[str, list[str]] = {}

        for token, slot in self._value_to_slot.items():
            if re.search(rf"\b{re.escape(token)}\b", lowered):
                informed.setdefault(slot, []).append(token)
        for token, (slot, value) in _VALUE_SYNONYMS.items():
            if re.search(rf"\b{re.escape(token)}\b", lowered):
                values = informed.setdefault(slot, [])
                if value not in values:
                    values.append(value)

        if _DONTCARE_RE.search(lowered):
            slot = context.focus_slot
            if slot in self.ontology.informable_slots and slot not in informed:
                informed[slot] = [DONTCARE]

        for slot in self.ontology.informable_slots:
            values = informed.get(slot)
            if not values:
                continue
            share = self.confidence / len(values)
            for value in values:
                acts.append(
                    UserActHypothesis("inform", slot=slot, value=value, confidence=share)
                )

        for slot, pattern in _REQUEST_PATTERNS:
            if pattern.search(lowered):
                acts.append(
                    UserActHypothesis("request", slot=slot, confidence=self.confidence)
                )

        affirmed = _AFFIRM_RE.search(lowered) is not None
        negated = _NEGATE_RE.search(lowered) is not None
        if affirmed and not negated:
            value = context.confirmed_value
            slot = context.focus_slot
            if value is not None and slot is not None and slot not in informed:
                acts.append(
                    UserActHypothesis(
                        "affirm", slot=slot, value=value, confidence=self.confidence
                    )
                )
            else:
                acts.append(UserActHypothesis("affirm", confidence=self.confidence))
        elif negated and not affirmed:
            acts.append(UserActHypothesis("negate", confidence=self.confidence))
            value = context.confirmed_value
            slot = context.focus_slot
            if value is not None and slot is not None and slot not in informed:
                acts.extend(self._counter_evidence(slot, value))

        if _REQALTS_RE.search(lowered):
            acts.append(UserActHypothesis("reqalts", confidence=self.confidence))
        if _BYE_RE.search(lowered):
            acts.append(UserActHypothesis("bye", confidence=self.confidence))
        if not acts:
            acts.append(UserActHypothesis("null", confidence=self.confidence))
        return acts

    def _counter_evidence(self, slot: str, value: str) -> list[UserActHypothesis]:
        """"Not that value": spread evidence over the slot's other values."""
        others = [v for v in self.ontology.values[slot] if v != value]
        share = self.confidence / len(others)
        return [
            UserActHypothesis("inform", slot=slot, value=v, confidence=share)
            for v in others
        ]
