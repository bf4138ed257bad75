"""Hand-crafted dialogue policy used to generate supervised training data.

Deliberately naive: it trusts top beliefs, which leaves headroom for the
reinforcement phase under noisy conditions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .actions import MasterAction, masked_action
from .belief import ACT_TYPES, BeliefState, top_query
from .database import VenueDatabase
from .exceptions import ConfigError
from .ontology import DONTCARE, Ontology

_BYE_INDEX = ACT_TYPES.index("bye")


@dataclass(frozen=True)
class BaselineConfig:
    """Thresholds and style knobs of the rule policy.

    select_tie_gap / select_second_floor define when a slot's top two values
    count as tied (resolved with select instead of confirm).

    scarce_match_max: with at most this many matches, an offer also mentions
    the constraint slots the search was narrowed by ("one of the few cheap
    places in the north"). The default cut sits inside the 2-4 match bucket
    on purpose, so the teacher's offer bits depend on context the policy
    input cannot fully resolve, like the original offer data; 0 disables it.

    discriminating_requests: ask for the slot that varies most across the
    matching venues rather than the first uncertain one.
    """

    confirm_threshold: float = 0.4
    accept_threshold: float = 0.7
    select_tie_gap: float = 0.15
    select_second_floor: float = 0.2
    scarce_match_max: int = 3
    discriminating_requests: bool = True
    version: str = "baseline/v2"

    def __post_init__(self) -> None:
        if not 0.0 < self.confirm_threshold <= self.accept_threshold <= 1.0:
            raise ConfigError("need 0 < confirm_threshold <= accept_threshold <= 1")
        if self.scarce_match_max < 0:
            raise ConfigError("scarce_match_max must be non-negative")


def offer_bits_for(
    ontology: Ontology,
    requested: frozenset[str],
    mention: frozenset[str] = frozenset(),
) -> tuple[bool, ...]:
    """Offer bits for {name}, the currently requested slots, and any extra
    slots worth mentioning. Postcode has no bit of its own and maps onto the
    address bit."""
    wanted = {"name"}
    for slot in requested | mention:
        wanted.add("address" if slot == "postcode" else slot)
    return tuple(slot in wanted for slot in ontology.offerable_slots)


def _most_discriminating(slots: list[str], matches) -> str:
    """The slot whose values vary most across the matched venues; ties keep
    ontology order. Falls back to the first slot when nothing matches."""
    best = slots[0]
    best_distinct = -1
    for slot in slots:
        distinct = len({getattr(v, slot) for v in matches})
        if distinct > best_distinct:
            best_distinct = distinct
            best = slot
    return best


def baseline_act(
    ontology: Ontology,
    state: BeliefState,
    db: VenueDatabase,
    cfg: BaselineConfig = BaselineConfig(),
) -> MasterAction:
    """Rule-based action choice; pure function of (belief, db, cfg)."""
    if state.last_user_acts[_BYE_INDEX]:
        return MasterAction("bye")

    tops = {s: state.top_value(ontology, s)[1] for s in ontology.informable_slots}
    count = state.matched_count
    query = top_query(ontology, state)
    matches = db.query(query)

    # Ask for slots with no usable evidence while several venues still match.
    if count is None or count > 1:
        uncertain = [s for s in ontology.informable_slots if tops[s] < cfg.confirm_threshold]
        if uncertain:
            slot = (
                _most_discriminating(uncertain, matches)
                if cfg.discriminating_requests
                else uncertain[0]
            )
            return MasterAction("request", query_slot=slot)

    def tied(slot: str) -> bool:
        p_second = state.second_value(ontology, slot)[1]
        return (
            tops[slot] >= cfg.confirm_threshold
            and p_second >= cfg.select_second_floor
            and tops[slot] - p_second <= cfg.select_tie_gap
        )

    # Double-check mid-confidence slots (tied ones fall through to select).
    for slot in ontology.informable_slots:
        if cfg.confirm_threshold <= tops[slot] < cfg.accept_threshold and not tied(slot):
            return MasterAction("confirm", query_slot=slot)

    # Too many matches and some slot is only dontcare because nothing was
    # heard for it: ask for it explicitly.
    if count is not None and count > 10:
        for slot in ontology.informable_slots:
            dist = state.slot_beliefs[slot]
            if dist[-1] > tops[slot]:
                return MasterAction("request", query_slot=slot)

    # Two strong candidates for one slot: ask the user to pick.
    for slot in ontology.informable_slots:
        if tied(slot):
            return MasterAction("select", query_slot=slot)

    if matches:
        mention = frozenset()
        if 0 < cfg.scarce_match_max and len(matches) <= cfg.scarce_match_max:
            mention = frozenset(s for s, v in query.constraints if v != DONTCARE)
        return masked_action(
            "offer", "none", offer_bits_for(ontology, state.requested, mention)
        )
    # No venue matches: the offer act on an empty result is verbalized as
    # "no venue matches".
    return masked_action(
        "offer", "none", tuple(s == "name" for s in ontology.offerable_slots)
    )
