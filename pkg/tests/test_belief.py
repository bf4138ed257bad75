"""Focus tracker, feature encoding, and top-query extraction."""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuraldm.actions import MasterAction
from neuraldm.belief import (
    ACT_TYPES,
    FEATURE_DIM,
    BeliefState,
    UserActHypothesis,
    featurize,
    focus_update,
    top_query,
)
from neuraldm.exceptions import InvalidEvidenceError
from neuraldm.ontology import DONTCARE, default_ontology


def inform(slot, value, conf):
    return UserActHypothesis("inform", slot=slot, value=value, confidence=conf)


def test_zero_evidence_keeps_distribution(ontology):
    state = BeliefState.initial(ontology)
    updated = focus_update(ontology, state, [UserActHypothesis("null")])
    assert np.array_equal(updated.slot_beliefs["food"], state.slot_beliefs["food"])
    assert updated.turn == 1
    assert "food" not in updated.changed


def test_focus_single_observation(ontology):
    state = BeliefState.initial(ontology)
    updated = focus_update(ontology, state, [inform("food", "chinese", 0.7)])
    assert updated.belief(ontology, "food", "chinese") == pytest.approx(0.7, abs=1e-12)
    assert updated.belief(ontology, "food", "none") == pytest.approx(0.3, abs=1e-12)


def test_focus_two_step_hand_case(ontology):
    state = BeliefState.initial(ontology)
    state = focus_update(ontology, state, [inform("food", "chinese", 0.7)])
    state = focus_update(ontology, state, [inform("food", "indian", 0.6)])
    assert state.belief(ontology, "food", "indian") == pytest.approx(0.6, abs=1e-12)
    assert state.belief(ontology, "food", "chinese") == pytest.approx(0.28, abs=1e-12)
    assert state.belief(ontology, "food", "none") == pytest.approx(0.12, abs=1e-12)


def test_focus_full_confidence_overrides(ontology):
    state = BeliefState.initial(ontology)
    state = focus_update(ontology, state, [inform("food", "thai", 0.6)])
    state = focus_update(ontology, state, [inform("food", "korean", 1.0)])
    assert state.belief(ontology, "food", "korean") == pytest.approx(1.0, abs=1e-12)


def test_focus_rejects_oversized_evidence(ontology):
    state = BeliefState.initial(ontology)
    hyps = [inform("food", "thai", 0.7), inform("food", "korean", 0.5)]
    with pytest.raises(InvalidEvidenceError):
        focus_update(ontology, state, hyps)


@given(
    data=st.lists(
        st.tuples(st.integers(min_value=0, max_value=15), st.floats(0.0, 1.0)),
        min_size=1, max_size=6,
    )
)
@settings(max_examples=100, deadline=None)
def test_focus_preserves_normalization(data):
    ontology = default_ontology()
    state = BeliefState.initial(ontology)
    for value_idx, conf in data:
        value = ontology.values["food"][value_idx % len(ontology.values["food"])]
        state = focus_update(ontology, state, [inform("food", value, conf)])
        total = state.slot_beliefs["food"].sum()
        assert abs(total - 1.0) <= 1e-9


def test_requested_and_act_indicators(ontology):
    state = BeliefState.initial(ontology)
    hyps = [
        UserActHypothesis("request", slot="phone"),
        inform("area", "north", 0.9),
    ]
    state = focus_update(ontology, state, hyps)
    assert state.requested == frozenset({"phone"})
    assert state.last_user_acts[ACT_TYPES.index("request")] == 1
    assert state.last_user_acts[ACT_TYPES.index("inform")] == 1
    assert state.last_user_acts[ACT_TYPES.index("bye")] == 0
    assert state.changed == frozenset({"area"})


def test_featurize_fresh_state(ontology):
    state = BeliefState.initial(ontology)
    feats = featurize(ontology, state)
    assert feats.shape == (FEATURE_DIM,)
    # Per-slot blocks: all probability on "none", zero entropy.
    for i in range(3):
        block = feats[i * 6 : (i + 1) * 6]
        assert block[3] == 1.0  # p_none
        assert np.allclose(block[[0, 1, 2, 4, 5]], 0.0)
    # Everything else is zero on a fresh state.
    assert np.allclose(feats[18:], 0.0)


def test_featurize_range_and_determinism(ontology, rng):
    state = BeliefState.initial(ontology)
    for _ in range(5):
        slot = ontology.informable_slots[int(rng.integers(3))]
        values = ontology.values[slot]
        value = values[int(rng.integers(len(values)))]
        state = focus_update(ontology, state, [inform(slot, value, float(rng.random()))])
    state = replace(state, matched_count=7)
    f1 = featurize(ontology, state)
    f2 = featurize(ontology, state)
    assert np.array_equal(f1, f2)
    assert np.all(f1 >= 0.0) and np.all(f1 <= 1.0)


def test_featurize_after_hand_update(ontology):
    state = BeliefState.initial(ontology)
    state = focus_update(ontology, state, [inform("food", "chinese", 0.7)])
    feats = featurize(ontology, state)
    assert feats[0] == pytest.approx(0.7)  # p_top
    assert feats[1] == pytest.approx(0.0)  # p_second
    assert feats[2] == pytest.approx(0.0)  # p_rest
    assert feats[3] == pytest.approx(0.3)  # p_none
    assert feats[5] == 1.0  # changed flag


def test_featurize_system_act_one_hots(ontology):
    state = BeliefState.initial(ontology)
    state = focus_update(ontology, state, [inform("food", "thai", 0.9)])
    action = MasterAction("request", query_slot="area")
    state = replace(state, last_system_act=action)
    feats = featurize(ontology, state)
    dia_block = feats[32:37]
    query_block = feats[37:41]
    assert dia_block.tolist() == [1.0, 0.0, 0.0, 0.0, 0.0]
    assert query_block.tolist() == [0.0, 0.0, 1.0, 0.0]


def test_top_query_all_none(ontology):
    state = BeliefState.initial(ontology)
    q = top_query(ontology, state)
    assert all(v == DONTCARE for _, v in q.constraints)


def test_top_query_single_constraint(ontology):
    state = BeliefState.initial(ontology)
    state = focus_update(ontology, state, [inform("food", "chinese", 0.7)])
    q = dict(top_query(ontology, state).constraints)
    assert q["food"] == "chinese"
    assert q["pricerange"] == DONTCARE
    assert q["area"] == DONTCARE


def test_top_query_tie_breaks_to_lower_index(ontology):
    state = BeliefState.initial(ontology)
    dist = state.slot_beliefs["food"].copy()
    dist[:] = 0.0
    i_brit = ontology.value_index("food", "british")
    i_thai = ontology.value_index("food", "thai")
    dist[i_brit] = 0.4
    dist[i_thai] = 0.4
    dist[-1] = 0.2
    state.slot_beliefs["food"] = dist
    q = dict(top_query(ontology, state).constraints)
    assert q["food"] == "british"  # lower ontology index wins the tie
