"""Semantic-level dialogue loop: belief tracking, action realization, episodes."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Protocol

import numpy as np

from .actions import MasterAction
from .belief import (
    MAX_TURNS,
    BeliefState,
    UserActHypothesis,
    featurize,
    focus_update,
    top_query,
)
from .database import Venue, VenueDatabase
from .ontology import Ontology
from .rl import Episode, Transition
from .simulator import (
    DEFAULT_PATIENCE,
    ErrorModel,
    SystemTurn,
    UserGoal,
    UserSimulator,
    corrupt,
    sample_goal,
    success_judge,
)

# Per-turn reward and terminal success bonus: a dialogue's total return is
# success_bonus * 1(success) - turns.
TURN_PENALTY = -1.0
SUCCESS_BONUS = 20.0

Actor = Callable[[np.ndarray, "DialogueManager", np.random.Generator], MasterAction]


@dataclass(frozen=True)
class TranscriptTurn:
    clean_acts: tuple[UserActHypothesis, ...]
    noisy_acts: tuple[UserActHypothesis, ...]
    system: SystemTurn


@dataclass(frozen=True)
class Transcript:
    goal: UserGoal  # post-relaxation goal the dialogue was judged against
    turns: tuple[TranscriptTurn, ...]
    success: bool


class DialogueManager:
    """Belief state plus database parsing for one dialogue."""

    def __init__(self, ontology: Ontology, db: VenueDatabase, max_turns: int = MAX_TURNS):
        self.ontology = ontology
        self.db = db
        self.max_turns = max_turns
        self.state = BeliefState.initial(ontology)
        self.matches: list[Venue] = []

    def observe(self, hyps: list[UserActHypothesis]) -> None:
        """Fold one turn of user evidence in and refresh the database match."""
        state = focus_update(self.ontology, self.state, hyps)
        self.matches = self.db.query(top_query(self.ontology, state))
        self.state = replace(state, matched_count=len(self.matches))

    def features(self) -> np.ndarray:
        return featurize(self.ontology, self.state, self.max_turns)

    def realize(self, action: MasterAction) -> SystemTurn:
        """Fill the action's content from the belief and database, and record
        it in the dialogue history."""
        venue = None
        confirm_value = None
        select_values: tuple[str, ...] = ()
        requested = self.state.requested
        offer_made = self.state.offer_made

        if action.dia_act == "offer":
            venue = self.matches[0] if self.matches else None
            offer_made = True
            if venue is not None:
                offered = {
                    name
                    for name, bit in zip(self.ontology.offerable_slots, action.offer_bits)
                    if bit
                }
                if "address" in offered:
                    offered.add("postcode")
                requested = frozenset(s for s in requested if s not in offered)
        elif action.query_slot != "none":
            slot = action.query_slot
            if action.dia_act == "confirm":
                confirm_value = self.state.top_value(self.ontology, slot)[0]
            elif action.dia_act == "select":
                select_values = (
                    self.state.top_value(self.ontology, slot)[0],
                    self.state.second_value(self.ontology, slot)[0],
                )

        self.state = replace(
            self.state,
            requested=requested,
            offer_made=offer_made,
            last_system_act=action,
        )
        return SystemTurn(
            action=action,
            venue=venue,
            confirm_value=confirm_value,
            select_values=select_values,
        )


class DialogueEnvironment(Protocol):
    def run_episode(self, actor: Actor, key: tuple[int, ...]) -> Episode: ...


class SimulatedEnvironment:
    """Complete policy-vs-simulator dialogues with the semantic-error channel.

    Episode randomness is keyed: run_episode(actor, key) derives its generator
    from (seed, *key), so identical keys reproduce identical dialogues
    regardless of call order or worker count.
    """

    def __init__(
        self,
        db: VenueDatabase,
        error_model: ErrorModel,
        seed: int,
        max_turns: int = MAX_TURNS,
        patience: int = DEFAULT_PATIENCE,
    ):
        self.db = db
        self.ontology = db.ontology
        self.error_model = error_model
        self.seed = seed
        self.max_turns = max_turns
        self.patience = patience

    @property
    def ser(self) -> float:
        return self.error_model.ser

    def run_episode(
        self,
        actor: Actor,
        key: tuple[int, ...],
        collect_transcript: bool = False,
    ) -> Episode | tuple[Episode, Transcript]:
        rng = np.random.default_rng((self.seed, *key))
        goal = sample_goal(self.db, rng, patience=self.patience)
        user = UserSimulator(goal, self.ontology, rng)
        dm = DialogueManager(self.ontology, self.db, self.max_turns)

        steps: list[tuple[np.ndarray, MasterAction]] = []
        system_turns: list[SystemTurn] = []
        turns: list[TranscriptTurn] = []
        user_acts = user.respond(None)
        for _ in range(self.max_turns):
            noisy = corrupt(user_acts, self.error_model, self.ontology, rng)
            dm.observe(noisy)
            feats = dm.features()
            action = actor(feats, dm, rng)
            system = dm.realize(action)
            steps.append((feats, action))
            system_turns.append(system)
            if collect_transcript:
                turns.append(TranscriptTurn(tuple(user_acts), tuple(noisy), system))
            if action.dia_act == "bye":
                break
            user_acts = user.respond(system)

        success = success_judge(self.ontology, user.goal, system_turns)
        rewards = [TURN_PENALTY] * len(steps)
        if success:
            rewards[-1] += SUCCESS_BONUS
        episode = Episode.from_steps(
            [(f, a, r) for (f, a), r in zip(steps, rewards)], success=success
        )
        if collect_transcript:
            return episode, Transcript(goal=user.goal, turns=tuple(turns), success=success)
        return episode


def transcript_record(transcript: Transcript) -> dict:
    """JSON-serializable form of one dialogue transcript."""

    def act(a: UserActHypothesis) -> dict:
        return {
            "act": a.act_type,
            "slot": a.slot,
            "value": a.value,
            "confidence": a.confidence,
        }

    return {
        "goal": {
            "constraints": dict(transcript.goal.constraints),
            "requests": list(transcript.goal.requests),
        },
        "success": transcript.success,
        "turns": [
            {
                "clean": [act(a) for a in t.clean_acts],
                "noisy": [act(a) for a in t.noisy_acts],
                "system": {
                    "dia_act": t.system.action.dia_act,
                    "query_slot": t.system.action.query_slot,
                    "offer_bits": list(t.system.action.offer_bits),
                    "venue_id": t.system.venue.id if t.system.venue else None,
                },
            }
            for t in transcript.turns
        ],
    }
