"""Template natural language generation for system turns."""

from __future__ import annotations

from .ontology import DONTCARE, Ontology
from .simulator import SystemTurn

GREETING = (
    "Hello, welcome to the restaurant information service. "
    "You can search by food type, price range and area. How may I help you?"
)

_REQUEST_TEMPLATES = {
    "food": "What kind of food are you looking for?",
    "pricerange": "What price range do you have in mind?",
    "area": "Which part of town should it be in?",
    "none": "How can I help you with your restaurant search?",
}

_CONFIRM_TEMPLATES = {
    "food": "Just to confirm, you are looking for {value} food, is that right?",
    "pricerange": "Just to confirm, you want something in the {value} price range, right?",
    "area": "Just to confirm, it should be in the {value} of town, right?",
}

_SLOT_PHRASES = {
    "food": "it serves {value} food",
    "pricerange": "it is in the {value} price range",
    "area": "it is in the {value} part of town",
}

NO_MATCH_TEXT = (
    "I am sorry, no venue matches your request. Would you like to try something else?"
)

BYE_TEXT = "Thank you for using the system. Goodbye."


def render(ontology: Ontology, turn: SystemTurn) -> str:
    """Verbalize a realized system turn."""
    action = turn.action
    if action.dia_act == "bye":
        return BYE_TEXT
    if action.dia_act == "request":
        return _REQUEST_TEMPLATES.get(action.query_slot, _REQUEST_TEMPLATES["none"])
    if action.dia_act == "confirm":
        value = turn.confirm_value
        if action.query_slot == "none" or value is None:
            return _REQUEST_TEMPLATES["none"]
        if value == DONTCARE:
            value = "any" if action.query_slot != "food" else "any kind of"
        return _CONFIRM_TEMPLATES[action.query_slot].format(value=value)
    if action.dia_act == "select":
        if action.query_slot == "none" or len(turn.select_values) < 2:
            return _REQUEST_TEMPLATES["none"]
        first, second = turn.select_values[0], turn.select_values[1]
        return f"Would you prefer {first} or {second} for the {action.query_slot}?"
    return _render_offer(ontology, turn)


def _render_offer(ontology: Ontology, turn: SystemTurn) -> str:
    venue = turn.venue
    if venue is None:
        return NO_MATCH_TEXT
    offered = {
        slot
        for slot, bit in zip(ontology.offerable_slots, turn.action.offer_bits)
        if bit
    }
    name = venue.name.title()
    parts = []
    for slot in ("food", "pricerange", "area"):
        if slot in offered:
            parts.append(_SLOT_PHRASES[slot].format(value=getattr(venue, slot)))
    lead = f"{name} is a nice restaurant"
    if parts:
        lead += "; " + " and ".join(parts)
    sentences = [lead + "."]
    if "phone" in offered:
        sentences.append(f"Their phone number is {venue.phone}.")
    if "address" in offered:
        sentences.append(f"They are at {venue.address}, {venue.postcode}.")
    return " ".join(sentences)
