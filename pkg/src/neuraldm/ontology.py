"""Restaurant domain ontology: slot inventories, legal values, serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .exceptions import ConfigError, DataError

DONTCARE = "dontcare"

ONTOLOGY_SCHEMA = "ontology/v1"

# Constraint slots the user can fill, in encoding order.
INFORMABLE_SLOTS = ("food", "pricerange", "area")
# Slots the user can ask for, in encoding order.
REQUESTABLE_SLOTS = ("phone", "address", "postcode", "food", "pricerange", "area")
# Slots with a dedicated offer output, in bit order. Postcode rides along with
# the address bit: any address offer also carries the postcode text.
OFFERABLE_SLOTS = ("name", "food", "pricerange", "area", "phone", "address")

@dataclass(frozen=True)
class Ontology:
    """Slot and value inventories. Value lists include the "dontcare" sentinel
    and their order is the encoding order used everywhere else."""

    informable_slots: tuple[str, ...] = INFORMABLE_SLOTS
    requestable_slots: tuple[str, ...] = REQUESTABLE_SLOTS
    offerable_slots: tuple[str, ...] = OFFERABLE_SLOTS
    values: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.informable_slots) != 3:
            raise ConfigError("exactly 3 informable slots are required")
        if len(self.offerable_slots) != 6:
            raise ConfigError("exactly 6 offerable slots are required")
        for slot in self.informable_slots:
            vals = self.values.get(slot)
            if not vals:
                raise ConfigError(f"missing value list for slot {slot!r}")
            if len(set(vals)) != len(vals):
                raise ConfigError(f"duplicate values for slot {slot!r}")
            if DONTCARE not in vals:
                raise ConfigError(f"value list for {slot!r} must include {DONTCARE!r}")

    def constraint_values(self, slot: str) -> tuple[str, ...]:
        """Legal venue values for a slot, i.e. everything except dontcare."""
        return tuple(v for v in self.values[slot] if v != DONTCARE)

    def value_index(self, slot: str, value: str) -> int:
        return self.values[slot].index(value)

    def is_legal(self, slot: str, value: str) -> bool:
        return value in self.values[slot]


def default_ontology() -> Ontology:
    """The shipped inventory: 15 food types, 3 price ranges, 5 areas."""
    doc = json.loads(
        resources.files("neuraldm.data").joinpath("ontology.json").read_text("utf-8")
    )
    return _ontology_from_doc(doc)


def save_ontology(ontology: Ontology, path: str) -> None:
    doc = {
        "schema": ONTOLOGY_SCHEMA,
        "informable_slots": list(ontology.informable_slots),
        "requestable_slots": list(ontology.requestable_slots),
        "offerable_slots": list(ontology.offerable_slots),
        "values": {s: list(v) for s, v in ontology.values.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_ontology(path: str) -> Ontology:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed ontology file {path}: {exc}") from exc
    if doc.get("schema") != ONTOLOGY_SCHEMA:
        raise DataError(f"unknown ontology schema {doc.get('schema')!r}")
    try:
        return _ontology_from_doc(doc)
    except KeyError as exc:
        raise DataError(f"ontology file {path} missing field {exc}") from exc


def _ontology_from_doc(doc: dict) -> Ontology:
    return Ontology(
        informable_slots=tuple(doc["informable_slots"]),
        requestable_slots=tuple(doc["requestable_slots"]),
        offerable_slots=tuple(doc["offerable_slots"]),
        values={s: tuple(v) for s, v in doc["values"].items()},
    )
