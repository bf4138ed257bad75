"""Rule policy: priority order, masking validity, purity."""

from dataclasses import replace

import numpy as np

from neuraldm.baseline import BaselineConfig, baseline_act
from neuraldm.belief import ACT_TYPES, BeliefState, UserActHypothesis, focus_update, top_query
from neuraldm.ontology import DONTCARE


def believe(ontology, state, slot, value, prob):
    dist = np.zeros_like(state.slot_beliefs[slot])
    dist[ontology.value_index(slot, value)] = prob
    dist[-1] = 1.0 - prob
    beliefs = dict(state.slot_beliefs)
    beliefs[slot] = dist
    return replace(state, slot_beliefs=beliefs)


def with_count(ontology, db, state):
    return replace(state, matched_count=len(db.query(top_query(ontology, state))))


def test_fresh_dialogue_requests_food(ontology, db):
    state = BeliefState.initial(ontology)
    action = baseline_act(ontology, state, db)
    assert action.dia_act == "request"
    assert action.query_slot == "food"  # most discriminating on the full database


def test_accepted_slots_with_request_offers_name_phone(ontology, db):
    state = BeliefState.initial(ontology)
    venue = db.venues[0]
    for slot in ontology.informable_slots:
        state = believe(ontology, state, slot, getattr(venue, slot), 0.9)
    state = replace(state, requested=frozenset({"phone"}))
    state = with_count(ontology, db, state)
    # Disable the scarcity mention to exercise the bare rule.
    cfg = BaselineConfig(scarce_match_max=0)
    action = baseline_act(ontology, state, db, cfg)
    assert action.dia_act == "offer"
    bits = dict(zip(ontology.offerable_slots, action.offer_bits))
    assert bits["name"] and bits["phone"]
    assert not bits["food"] and not bits["pricerange"] and not bits["area"]


def test_scarce_match_mentions_constraints(ontology, db):
    state = BeliefState.initial(ontology)
    venue = db.venues[0]
    for slot in ontology.informable_slots:
        state = believe(ontology, state, slot, getattr(venue, slot), 0.9)
    state = with_count(ontology, db, state)
    if state.matched_count <= 3:
        action = baseline_act(ontology, state, db)
        bits = dict(zip(ontology.offerable_slots, action.offer_bits))
        assert bits["food"] and bits["pricerange"] and bits["area"]


def test_mid_confidence_confirms(ontology, db):
    state = BeliefState.initial(ontology)
    state = believe(ontology, state, "food", "chinese", 0.5)
    state = believe(ontology, state, "pricerange", "cheap", 0.9)
    state = believe(ontology, state, "area", "north", 0.9)
    state = with_count(ontology, db, state)
    action = baseline_act(ontology, state, db)
    assert action.dia_act == "confirm"
    assert action.query_slot == "food"


def test_tied_values_select(ontology, db):
    state = BeliefState.initial(ontology)
    dist = np.zeros_like(state.slot_beliefs["food"])
    dist[ontology.value_index("food", "chinese")] = 0.45
    dist[ontology.value_index("food", "indian")] = 0.40
    dist[-1] = 0.15
    beliefs = dict(state.slot_beliefs)
    beliefs["food"] = dist
    state = replace(state, slot_beliefs=beliefs)
    state = believe(ontology, state, "pricerange", "cheap", 0.9)
    state = believe(ontology, state, "area", "north", 0.9)
    state = with_count(ontology, db, state)
    action = baseline_act(ontology, state, db)
    assert action.dia_act == "select"
    assert action.query_slot == "food"


def test_user_bye_answered_with_bye(ontology, db):
    state = BeliefState.initial(ontology)
    state = focus_update(ontology, state, [UserActHypothesis("bye")])
    assert baseline_act(ontology, state, db).dia_act == "bye"


def test_no_match_offers_name_only(ontology, db):
    food, area = db.no_match_pair()
    state = BeliefState.initial(ontology)
    state = believe(ontology, state, "food", food, 0.95)
    state = believe(ontology, state, "area", area, 0.95)
    state = believe(ontology, state, "pricerange", "cheap", 0.95)
    state = with_count(ontology, db, state)
    assert state.matched_count == 0
    action = baseline_act(ontology, state, db)
    assert action.dia_act == "offer"
    assert action.offer_bits == tuple(s == "name" for s in ontology.offerable_slots)


def test_purity_and_masking(ontology, db, rng):
    state = BeliefState.initial(ontology)
    for _ in range(30):
        slot = ontology.informable_slots[int(rng.integers(3))]
        values = ontology.values[slot]
        value = values[int(rng.integers(len(values)))]
        hyp = UserActHypothesis("inform", slot=slot, value=value, confidence=float(rng.random()))
        state = focus_update(ontology, state, [hyp])
        state = with_count(ontology, db, state)
        first = baseline_act(ontology, state, db)
        second = baseline_act(ontology, state, db)
        assert first == second  # pure function, and the constructor enforces masking
