"""Focus-style belief tracking and the fixed 48-dim policy input encoding."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .actions import DIA_ACTS, QUERY_SLOTS, MasterAction
from .database import MATCH_BUCKETS, DbQuery, match_bucket
from .exceptions import InvalidEvidenceError
from .ontology import DONTCARE, Ontology

ACT_TYPES = ("inform", "request", "confirm_ans", "negate", "affirm", "reqalts", "bye", "null")

# Acts whose (slot, value) payload counts as evidence for the focus update.
# Our affirm/negate acts always carry the value the user actually wants.
_EVIDENCE_ACTS = frozenset({"inform", "confirm_ans", "affirm", "negate"})

FEATURE_DIM = 48
MAX_TURNS = 30

_SLOT_BLOCK = 6  # p_top, p_second, p_rest, p_none, entropy, changed


@dataclass(frozen=True)
class UserActHypothesis:
    """One confidence-scored semantic hypothesis for a user turn."""

    act_type: str
    slot: str | None = None
    value: str | None = None
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.act_type not in ACT_TYPES:
            raise ValueError(f"unknown user act type {self.act_type!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


@dataclass(frozen=True)
class BeliefState:
    """Per-slot value distributions plus dialogue-history features.

    Each slot distribution runs over the ontology's value list (dontcare
    included) with an extra trailing "none" cell, and always sums to one.
    matched_count is None until the first database refresh; the match-bucket
    features stay zero until then.
    """

    slot_beliefs: dict[str, np.ndarray]
    requested: frozenset[str] = frozenset()
    last_user_acts: tuple[int, ...] = (0,) * len(ACT_TYPES)
    last_system_act: MasterAction | None = None
    offer_made: bool = False
    matched_count: int | None = None
    turn: int = 0
    changed: frozenset[str] = frozenset()

    @classmethod
    def initial(cls, ontology: Ontology) -> "BeliefState":
        beliefs = {}
        for slot in ontology.informable_slots:
            dist = np.zeros(len(ontology.values[slot]) + 1)
            dist[-1] = 1.0  # all mass on "none"
            beliefs[slot] = dist
        return cls(slot_beliefs=beliefs)

    def belief(self, ontology: Ontology, slot: str, value: str) -> float:
        """Probability of one value (or "none") for a slot."""
        if value == "none":
            return float(self.slot_beliefs[slot][-1])
        return float(self.slot_beliefs[slot][ontology.value_index(slot, value)])

    def top_value(self, ontology: Ontology, slot: str) -> tuple[str, float]:
        """Highest-probability real value (ties -> lowest ontology index)."""
        values = self.slot_beliefs[slot][:-1]
        idx = int(np.argmax(values))
        return ontology.values[slot][idx], float(values[idx])

    def second_value(self, ontology: Ontology, slot: str) -> tuple[str, float]:
        values = self.slot_beliefs[slot][:-1]
        order = np.argsort(-values, kind="stable")
        idx = int(order[1])
        return ontology.values[slot][idx], float(values[idx])


def focus_update(
    ontology: Ontology, state: BeliefState, hyps: list[UserActHypothesis]
) -> BeliefState:
    """Apply one turn of evidence: b'(v) = conf(v) + (1 - sum conf) * b(v).

    Also refreshes the requested-slot set, the last-user-act indicators, the
    per-slot changed flags, and increments the turn counter. The database
    match count is refreshed separately after querying.
    """
    evidence: dict[str, dict[int, float]] = {s: {} for s in ontology.informable_slots}
    requested = set(state.requested)
    act_indicators = [0] * len(ACT_TYPES)

    for hyp in hyps:
        act_indicators[ACT_TYPES.index(hyp.act_type)] = 1
        if hyp.act_type == "request" and hyp.slot in ontology.requestable_slots:
            requested.add(hyp.slot)
        if (
            hyp.act_type in _EVIDENCE_ACTS
            and hyp.slot in evidence
            and hyp.value is not None
            and ontology.is_legal(hyp.slot, hyp.value)
        ):
            idx = ontology.value_index(hyp.slot, hyp.value)
            evidence[hyp.slot][idx] = evidence[hyp.slot].get(idx, 0.0) + hyp.confidence

    beliefs = {}
    changed = set()
    for slot in ontology.informable_slots:
        slot_evidence = evidence[slot]
        total = sum(slot_evidence.values())
        if total > 1.0 + 1e-9:
            raise InvalidEvidenceError(
                f"evidence for slot {slot!r} sums to {total:.6f} > 1"
            )
        dist = state.slot_beliefs[slot] * (1.0 - total)
        for idx, conf in slot_evidence.items():
            dist[idx] += conf
        beliefs[slot] = dist
        if total > 0.0:
            changed.add(slot)

    return replace(
        state,
        slot_beliefs=beliefs,
        requested=frozenset(requested),
        last_user_acts=tuple(act_indicators),
        turn=state.turn + 1,
        changed=frozenset(changed),
    )


def featurize(
    ontology: Ontology, state: BeliefState, max_turns: int = MAX_TURNS
) -> np.ndarray:
    """Encode a belief state as the fixed 48-dim vector fed to the policy.

    Layout: per informable slot [p_top, p_second, p_rest, p_none, normalized
    entropy, changed flag] (18) | requested indicators (6) | last-user-act
    indicators (8) | last-system dialogue-act one-hot (5) | last-system query
    one-hot (4) | match-bucket one-hot (5) | offer_made (1) | turn fraction (1).
    """
    feats = np.zeros(FEATURE_DIM)
    pos = 0
    for slot in ontology.informable_slots:
        dist = state.slot_beliefs[slot]
        values = dist[:-1]
        order = np.argsort(-values, kind="stable")
        p_top = float(values[order[0]]) if len(values) else 0.0
        p_second = float(values[order[1]]) if len(values) > 1 else 0.0
        p_none = float(dist[-1])
        p_rest = max(0.0, 1.0 - p_top - p_second - p_none)
        nonzero = dist[dist > 0.0]
        entropy = float(-(nonzero * np.log(nonzero)).sum()) / np.log(len(dist))
        feats[pos : pos + _SLOT_BLOCK] = (
            p_top, p_second, p_rest, p_none, entropy, float(slot in state.changed),
        )
        pos += _SLOT_BLOCK

    for slot in ontology.requestable_slots:
        feats[pos] = float(slot in state.requested)
        pos += 1

    feats[pos : pos + len(ACT_TYPES)] = state.last_user_acts
    pos += len(ACT_TYPES)

    if state.last_system_act is not None:
        feats[pos + DIA_ACTS.index(state.last_system_act.dia_act)] = 1.0
        feats[pos + len(DIA_ACTS) + QUERY_SLOTS.index(state.last_system_act.query_slot)] = 1.0
    pos += len(DIA_ACTS) + len(QUERY_SLOTS)

    if state.matched_count is not None:
        feats[pos + match_bucket(state.matched_count)] = 1.0
    pos += MATCH_BUCKETS

    feats[pos] = float(state.offer_made)
    feats[pos + 1] = min(state.turn / max_turns, 1.0)
    return feats


def top_query(ontology: Ontology, state: BeliefState) -> DbQuery:
    """Database query from the top prediction of each informable slot.

    The argmax runs over values plus "none"; "none" maps to dontcare. Ties
    resolve to the lowest value index ("none" loses all ties).
    """
    constraints = {}
    for slot in ontology.informable_slots:
        dist = state.slot_beliefs[slot]
        best = int(np.argmax(dist[:-1]))
        if dist[-1] > dist[best]:
            constraints[slot] = DONTCARE
        else:
            value = ontology.values[slot][best]
            constraints[slot] = value
    return DbQuery.from_dict(ontology, constraints)
