"""Master dialogue actions: the factored system action space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

DIA_ACTS = ("request", "offer", "confirm", "select", "bye")
QUERY_SLOTS = ("food", "pricerange", "area", "none")
QUERY_NONE = "none"
N_OFFER_BITS = 6

# Dialogue acts for which the query head is meaningful.
QUERY_ACTS = frozenset({"request", "confirm", "select"})

NO_BITS = (False,) * N_OFFER_BITS


@dataclass(frozen=True)
class MasterAction:
    """Factored system action: dialogue act x query slot x offer bit-set.

    The query slot is "none" unless the act is request/confirm/select, and the
    offer bits are all false unless the act is "offer". The constructor
    rejects violations; use masked_action() to coerce raw head outputs.
    """

    dia_act: str
    query_slot: str = QUERY_NONE
    offer_bits: tuple[bool, ...] = NO_BITS

    def __post_init__(self) -> None:
        if self.dia_act not in DIA_ACTS:
            raise ValueError(f"unknown dialogue act {self.dia_act!r}")
        if self.query_slot not in QUERY_SLOTS:
            raise ValueError(f"unknown query slot {self.query_slot!r}")
        if len(self.offer_bits) != N_OFFER_BITS:
            raise ValueError("offer_bits must have exactly 6 entries")
        if self.dia_act not in QUERY_ACTS and self.query_slot != QUERY_NONE:
            raise ValueError(f"{self.dia_act} action must carry query slot 'none'")
        if self.dia_act != "offer" and any(self.offer_bits):
            raise ValueError(f"{self.dia_act} action must carry no offer bits")


def masked_action(
    dia_act: str, query_slot: str, offer_bits: Iterable[bool]
) -> MasterAction:
    """Build a MasterAction from raw head outputs, masking inactive heads."""
    if dia_act not in QUERY_ACTS:
        query_slot = QUERY_NONE
    bits = tuple(bool(b) for b in offer_bits) if dia_act == "offer" else NO_BITS
    return MasterAction(dia_act=dia_act, query_slot=query_slot, offer_bits=bits)


def action_to_labels(action: MasterAction) -> tuple[int, int, tuple[int, ...]]:
    """Encode an action as (dia id, query id, offer bits) for training labels."""
    return (
        DIA_ACTS.index(action.dia_act),
        QUERY_SLOTS.index(action.query_slot),
        tuple(int(b) for b in action.offer_bits),
    )


def labels_to_action(dia_id: int, query_id: int, offer_bits: Iterable[int]) -> MasterAction:
    """Decode training labels back into a MasterAction (must be legal)."""
    return MasterAction(
        dia_act=DIA_ACTS[dia_id],
        query_slot=QUERY_SLOTS[query_id],
        offer_bits=tuple(bool(b) for b in offer_bits),
    )


def enumerate_legal_actions() -> list[MasterAction]:
    """All legal actions under the masking rules (77 in total)."""
    actions = [MasterAction("bye")]
    for dia in sorted(QUERY_ACTS):
        for slot in QUERY_SLOTS:
            actions.append(MasterAction(dia, query_slot=slot))
    for bits in range(2 ** N_OFFER_BITS):
        pattern = tuple(bool((bits >> k) & 1) for k in range(N_OFFER_BITS))
        actions.append(MasterAction("offer", offer_bits=pattern))
    return actions
