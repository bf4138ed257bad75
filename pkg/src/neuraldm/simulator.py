"""Agenda-based user simulator with a configurable semantic-error channel.

The simulator interacts at the semantic level: it consumes realized system
turns (action plus the venue/value the system is talking about) and produces
clean user acts. The error channel then corrupts those acts and attaches
confidence scores, which is what the belief tracker actually sees.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .actions import MasterAction
from .belief import UserActHypothesis
from .database import Venue, VenueDatabase
from .exceptions import ConfigError
from .ontology import DONTCARE, Ontology

CONTACT_SLOTS = ("phone", "address", "postcode")

# Users front-load their constraints: each real constraint is stated in the
# opening turn with this probability (at least one always is).
OPENING_INFORM_PROB = 0.8

_EVIDENCE_ACTS = frozenset({"inform", "confirm_ans", "affirm", "negate"})


@dataclass(frozen=True)
class SystemTurn:
    """A system action as the user perceives it: act plus realized content."""

    action: MasterAction
    venue: Venue | None = None
    confirm_value: str | None = None
    select_values: tuple[str, ...] = ()


# How many futile system turns (re-asks of answered slots, offers violating
# the goal) a user tolerates before hanging up; also caps constraint
# relaxations on no-match answers.
DEFAULT_PATIENCE = 2


@dataclass(frozen=True)
class UserGoal:
    constraints: tuple[tuple[str, str], ...]
    requests: tuple[str, ...]
    patience: int = DEFAULT_PATIENCE

    def __post_init__(self) -> None:
        if not self.requests:
            raise ConfigError("a user goal needs at least one request slot")
        if all(v == DONTCARE for _, v in self.constraints):
            raise ConfigError("a user goal needs at least one real constraint")

    def constraint(self, slot: str) -> str:
        return dict(self.constraints)[slot]


@dataclass(frozen=True)
class ErrorModel:
    """Semantic-error channel parameters.

    confusion = (substitute_value, drop_act, insert_random_act) weights.
    Confidence samplers are Beta distributions parameterized by (mean, spread).
    """

    ser: float = 0.0
    confusion: tuple[float, float, float] = (0.6, 0.2, 0.2)
    confidence_correct: tuple[float, float] = (0.8, 0.15)
    confidence_error: tuple[float, float] = (0.4, 0.2)

    def __post_init__(self) -> None:
        if not 0.0 <= self.ser <= 1.0:
            raise ConfigError("semantic error rate must lie in [0, 1]")
        if abs(sum(self.confusion) - 1.0) > 1e-9:
            raise ConfigError("confusion weights must sum to 1")

    def sample_correct(self, rng: np.random.Generator) -> float:
        return _beta_sample(rng, *self.confidence_correct)

    def sample_error(self, rng: np.random.Generator) -> float:
        return _beta_sample(rng, *self.confidence_error)


def _beta_sample(rng: np.random.Generator, mean: float, spread: float) -> float:
    var = spread * spread
    cap = mean * (1.0 - mean)
    if var >= cap:
        var = 0.99 * cap
    shape = cap / var - 1.0
    draw = rng.beta(mean * shape, (1.0 - mean) * shape)
    return float(min(max(draw, 1e-3), 1.0))


def sample_goal(
    db: VenueDatabase, rng: np.random.Generator | int, patience: int = DEFAULT_PATIENCE
) -> UserGoal:
    """Draw a user goal: 90% satisfiable, 10% from the no-match region.

    Satisfiable goals copy an existing venue's constraint values; each is
    then independently relaxed to dontcare with probability 0.25 (keeping at
    least one real constraint). Requests are a uniform non-empty subset of
    the contact slots.
    """
    if len(db) == 0:
        raise ConfigError("cannot sample goals from an empty database")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    ontology = db.ontology
    slots = ontology.informable_slots

    if rng.random() < 0.9:
        venue = db.venues[int(rng.integers(len(db)))]
        constraints = {s: getattr(venue, s) for s in slots}
        originals = dict(constraints)
        for slot in slots:
            if rng.random() < 0.25:
                constraints[slot] = DONTCARE
        if all(v == DONTCARE for v in constraints.values()):
            keep = slots[int(rng.integers(len(slots)))]
            constraints[keep] = originals[keep]
    else:
        pair = db.no_match_pair()
        if pair is None:
            raise ConfigError("database has no empty (food, area) region")
        prices = ontology.constraint_values("pricerange")
        price = DONTCARE if rng.random() < 0.25 else prices[int(rng.integers(len(prices)))]
        constraints = {"food": pair[0], "pricerange": price, "area": pair[1]}

    mask = int(rng.integers(1, 2 ** len(CONTACT_SLOTS)))
    requests = tuple(s for i, s in enumerate(CONTACT_SLOTS) if (mask >> i) & 1)
    return UserGoal(
        constraints=tuple((s, constraints[s]) for s in slots),
        requests=requests,
        patience=patience,
    )


class UserSimulator:
    """Scripted goal-directed user for one dialogue."""

    def __init__(self, goal: UserGoal, ontology: Ontology, rng: np.random.Generator):
        self.ontology = ontology
        self.rng = rng
        self.requests = goal.requests
        self.patience = goal.patience
        self._constraints = dict(goal.constraints)
        self._stated: set[str] = set()
        self._satisfied: dict[int, set[str]] = {}
        self._relaxations = 0
        self._annoyance = 0
        self._said_bye = False
        self._last_correction: tuple[int, str] | None = None
        self._seen_matching_offer = False

    @property
    def goal(self) -> UserGoal:
        """Current goal, reflecting any constraint relaxations so far."""
        return UserGoal(
            constraints=tuple(
                (s, self._constraints[s]) for s in self.ontology.informable_slots
            ),
            requests=self.requests,
            patience=self.patience,
        )

    def respond(self, system: SystemTurn | None) -> list[UserActHypothesis]:
        """Clean (confidence 1) user acts replying to the given system turn.

        Re-asking an already answered slot or offering a venue that violates
        the goal costs patience; past the limit the user hangs up. Confirms
        and selects stay free, so double-checking is never punished.
        """
        if self._said_bye:
            return [UserActHypothesis("bye")]
        if system is None:
            return self._opening()
        action = system.action
        if action.dia_act == "bye":
            return []
        if action.dia_act == "request" and action.query_slot in self._stated:
            self._annoyance += 1
        elif action.dia_act == "offer" and system.venue is not None:
            if any(
                self._constraints[s] != DONTCARE
                and getattr(system.venue, s) != self._constraints[s]
                for s in self.ontology.informable_slots
            ):
                self._annoyance += 1
        if self._annoyance > self.patience:
            self._said_bye = True
            return [UserActHypothesis("bye")]
        if action.dia_act == "request":
            return self._answer_constraint(action.query_slot)
        if action.dia_act == "confirm":
            return self._answer_confirm(action.query_slot, system.confirm_value)
        if action.dia_act == "select":
            return self._answer_constraint(action.query_slot)
        return self._react_to_offer(system)

    def _opening(self) -> list[UserActHypothesis]:
        real = [s for s, v in self._constraints.items() if v != DONTCARE]
        picked = [s for s in real if self.rng.random() < OPENING_INFORM_PROB]
        if not picked:
            picked = [real[int(self.rng.integers(len(real)))]]
        self._stated.update(picked)
        return [self._inform(s) for s in picked]

    def _inform(self, slot: str) -> UserActHypothesis:
        self._stated.add(slot)
        return UserActHypothesis("inform", slot=slot, value=self._constraints[slot])

    def _answer_constraint(self, slot: str) -> list[UserActHypothesis]:
        if slot == "none":
            return self._fallback()
        return [self._inform(slot)]

    def _answer_confirm(self, slot: str, value: str | None) -> list[UserActHypothesis]:
        if slot == "none":
            return self._fallback()
        want = self._constraints[slot]
        if value is None or want == DONTCARE:
            return [self._inform(slot)]
        if value == want:
            return [UserActHypothesis("affirm", slot=slot, value=want)]
        return [UserActHypothesis("negate", slot=slot, value=want)]

    def _react_to_offer(self, system: SystemTurn) -> list[UserActHypothesis]:
        venue = system.venue
        if venue is None:
            return self._relax_or_give_up()
        violated = [
            s
            for s in self.ontology.informable_slots
            if self._constraints[s] != DONTCARE and getattr(venue, s) != self._constraints[s]
        ]
        if violated:
            slot = violated[0]
            acts = [self._inform(slot)]
            if self._last_correction == (venue.id, slot):
                acts.insert(0, UserActHypothesis("reqalts"))
            self._last_correction = (venue.id, slot)
            return acts

        self._seen_matching_offer = True
        offered = {
            name
            for name, bit in zip(self.ontology.offerable_slots, system.action.offer_bits)
            if bit
        }
        covered = self._satisfied.setdefault(venue.id, set())
        for req in self.requests:
            if req in offered or (req == "postcode" and "address" in offered):
                covered.add(req)
        pending = [r for r in self.requests if r not in covered]
        if pending:
            return [UserActHypothesis("request", slot=pending[0])]
        self._said_bye = True
        return [UserActHypothesis("bye")]

    def _relax_or_give_up(self) -> list[UserActHypothesis]:
        # Never relax the last real constraint: a goal keeps at least one.
        real = [s for s, v in self._constraints.items() if v != DONTCARE]
        if len(real) < 2 or self._relaxations >= self.patience:
            self._said_bye = True
            return [UserActHypothesis("bye")]
        slot = real[int(self.rng.integers(len(real)))]
        self._constraints[slot] = DONTCARE
        self._relaxations += 1
        return [self._inform(slot)]

    def _fallback(self) -> list[UserActHypothesis]:
        unstated = [
            s
            for s, v in self._constraints.items()
            if v != DONTCARE and s not in self._stated
        ]
        if unstated:
            return [self._inform(unstated[0])]
        if self._seen_matching_offer:
            pendings = [
                r
                for r in self.requests
                if not any(r in covered for covered in self._satisfied.values())
            ]
            if pendings:
                return [UserActHypothesis("request", slot=pendings[0])]
        real = [s for s, v in self._constraints.items() if v != DONTCARE]
        if real:
            return [self._inform(real[0])]
        return [UserActHypothesis("null")]


def corrupt(
    acts: list[UserActHypothesis],
    em: ErrorModel,
    ontology: Ontology,
    rng: np.random.Generator,
) -> list[UserActHypothesis]:
    """Push clean acts through the error channel.

    Each act is independently corrupted with probability em.ser: its value is
    substituted, the act is dropped, or a random act is inserted next to it.
    Surviving correct acts draw confidence from the correct sampler, corrupted
    material from the error sampler. Per-slot evidence is renormalized to sum
    to at most one.
    """
    noisy: list[UserActHypothesis] = []
    for act in acts:
        if rng.random() >= em.ser:
            noisy.append(replace(act, confidence=em.sample_correct(rng)))
            continue
        kind = _draw_confusion(em.confusion, rng)
        substitutable = (
            act.slot in ontology.informable_slots and act.value is not None
        )
        if kind == 0 and substitutable:
            others = [v for v in ontology.values[act.slot] if v != act.value]
            value = others[int(rng.integers(len(others)))]
            noisy.append(replace(act, value=value, confidence=em.sample_error(rng)))
        elif kind == 2:
            noisy.append(replace(act, confidence=em.sample_correct(rng)))
            noisy.append(_random_inform(ontology, rng, em.sample_error(rng)))
        # else: act dropped (substitution on a value-less act degrades to a drop)

    return _renormalize(noisy, ontology)


def _draw_confusion(weights: tuple[float, float, float], rng: np.random.Generator) -> int:
    return int(np.searchsorted(np.cumsum(weights), rng.random() * sum(weights)))


def _random_inform(
    ontology: Ontology, rng: np.random.Generator, confidence: float
) -> UserActHypothesis:
    slot = ontology.informable_slots[int(rng.integers(len(ontology.informable_slots)))]
    values = ontology.values[slot]
    value = values[int(rng.integers(len(values)))]
    return UserActHypothesis("inform", slot=slot, value=value, confidence=confidence)


def _renormalize(
    acts: list[UserActHypothesis], ontology: Ontology
) -> list[UserActHypothesis]:
    totals: dict[str, float] = {}
    for act in acts:
        if act.act_type in _EVIDENCE_ACTS and act.slot in ontology.informable_slots:
            totals[act.slot] = totals.get(act.slot, 0.0) + act.confidence
    scales = {s: 1.0 / t for s, t in totals.items() if t > 1.0}
    if not scales:
        return acts
    return [
        replace(a, confidence=a.confidence * scales[a.slot])
        if a.act_type in _EVIDENCE_ACTS and a.slot in scales
        else a
        for a in acts
    ]


def success_judge(
    ontology: Ontology, goal: UserGoal, system_turns: list[SystemTurn]
) -> bool:
    """Objective success: some offered venue satisfies every real constraint
    of the (post-relaxation) goal, and every requested slot was offered for
    that same venue. The address bit covers postcode requests."""
    constraints = [(s, v) for s, v in goal.constraints if v != DONTCARE]
    offered_by_venue: dict[int, set[str]] = {}
    for turn in system_turns:
        if turn.action.dia_act != "offer" or turn.venue is None:
            continue
        venue = turn.venue
        if any(getattr(venue, s) != v for s, v in constraints):
            continue
        slots = offered_by_venue.setdefault(venue.id, set())
        slots.update(
            name
            for name, bit in zip(ontology.offerable_slots, turn.action.offer_bits)
            if bit
        )
    for offered in offered_by_venue.values():
        if all(
            r in offered or (r == "postcode" and "address" in offered)
            for r in goal.requests
        ):
            return True
    return False
