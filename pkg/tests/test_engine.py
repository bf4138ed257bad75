"""Text decoder, template generation, and the chat engine loop."""

import numpy as np
import pytest

from neuraldm import nlg
from neuraldm.actions import MasterAction, masked_action
from neuraldm.decoder import DecoderContext, TextDecoder
from neuraldm.engine import ChatEngine
from neuraldm.exceptions import DataError
from neuraldm.ontology import DONTCARE
from neuraldm.simulator import SystemTurn


@pytest.fixture()
def decoder(ontology):
    return TextDecoder(ontology)


def acts_of(hyps):
    return {(h.act_type, h.slot, h.value) for h in hyps}


def test_decode_informs(decoder):
    hyps = decoder.decode("I want cheap chinese food in the north")
    got = acts_of(hyps)
    assert ("inform", "food", "chinese") in got
    assert ("inform", "pricerange", "cheap") in got
    assert ("inform", "area", "north") in got
    assert all(h.confidence == pytest.approx(0.9) for h in hyps)


def test_decode_requests(decoder):
    got = acts_of(decoder.decode("what is the phone number and the address?"))
    assert ("request", "phone", None) in got
    assert ("request", "address", None) in got


def test_decode_postcode(decoder):
    got = acts_of(decoder.decode("whats the post code"))
    assert ("request", "postcode", None) in got


def test_decode_bye_and_null(decoder):
    assert ("bye", None, None) in acts_of(decoder.decode("thanks, bye!"))
    hyps = decoder.decode("xyzzy plugh")
    assert [h.act_type for h in hyps] == ["null"]


def test_decode_dontcare_uses_context(decoder, ontology):
    context = DecoderContext(
        last_system=SystemTurn(action=MasterAction("request", query_slot="pricerange"))
    )
    got = acts_of(decoder.decode("anything is fine", context))
    assert ("inform", "pricerange", DONTCARE) in got
    # Without a slot in focus the phrase decodes to nothing actionable.
    got = acts_of(decoder.decode("anything is fine"))
    assert ("null", None, None) in got


def test_decode_affirm_attaches_confirmed_value(decoder):
    context = DecoderContext(
        last_system=SystemTurn(
            action=MasterAction("confirm", query_slot="food"), confirm_value="thai"
        )
    )
    got = acts_of(decoder.decode("yes", context))
    assert ("affirm", "food", "thai") in got


def test_decode_bare_negate_spreads_counter_evidence(decoder, ontology):
    context = DecoderContext(
        last_system=SystemTurn(
            action=MasterAction("confirm", query_slot="food"), confirm_value="thai"
        )
    )
    hyps = decoder.decode("no", context)
    informs = [h for h in hyps if h.act_type == "inform"]
    assert len(informs) == len(ontology.values["food"]) - 1
    assert all(h.value != "thai" for h in informs)
    total = sum(h.confidence for h in informs)
    assert total <= 1.0 + 1e-9


def test_decode_two_values_one_slot_split_confidence(decoder):
    hyps = decoder.decode("chinese or indian?")
    informs = [h for h in hyps if h.act_type == "inform"]
    assert len(informs) == 2
    assert sum(h.confidence for h in informs) == pytest.approx(0.9)


def test_nlg_covers_every_act(ontology, db):
    venue = db.venues[0]
    turns = [
        SystemTurn(action=MasterAction("request", query_slot="food")),
        SystemTurn(action=MasterAction("confirm", query_slot="area"), confirm_value="north"),
        SystemTurn(
            action=MasterAction("select", query_slot="pricerange"),
            select_values=("cheap", "expensive"),
        ),
        SystemTurn(
            action=masked_action("offer", "none", (True, True, False, True, True, True)),
            venue=venue,
        ),
        SystemTurn(action=masked_action("offer", "none", (True,) + (False,) * 5), venue=None),
        SystemTurn(action=MasterAction("bye")),
    ]
    texts = [nlg.render(ontology, t) for t in turns]
    assert all(text for text in texts)
    assert venue.name.title() in texts[3]
    assert venue.phone in texts[3]
    assert venue.postcode in texts[3]
    assert "no venue matches" in texts[4].lower()


def test_nlg_dontcare_confirm_is_english(ontology):
    turn = SystemTurn(
        action=MasterAction("confirm", query_slot="food"), confirm_value=DONTCARE
    )
    text = nlg.render(ontology, turn)
    assert DONTCARE not in text


def test_engine_happy_path(tiny_model, db, ontology):
    engine = ChatEngine(params=tiny_model, db=db, ontology=ontology)
    assert "restaurant" in engine.greeting().lower()
    result = engine.step("cheap chinese in the north please")
    assert result.system_text
    assert result.turn == 1
    assert not result.closed
    summary = result.belief_summary
    assert summary["slots"]["food"]["top_value"] == "chinese"
    result = engine.step("bye")
    assert result.closed
    with pytest.raises(DataError):
        engine.step("hello?")


def test_engine_rejects_empty_text(tiny_model, db, ontology):
    engine = ChatEngine(params=tiny_model, db=db, ontology=ontology)
    with pytest.raises(DataError):
        engine.step("   ")


def test_engine_enforces_turn_cap(tiny_model, db, ontology):
    engine = ChatEngine(params=tiny_model, db=db, ontology=ontology, max_turns=5)
    closed = False
    for i in range(5):
        closed = engine.step(f"turn {i} chinese").closed
        if closed:
            break
    assert closed or engine.step("one more").closed
    assert len(engine.turns) <= 5
