"""Venue database: seeded synthetic generation, constraint queries, match buckets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ConfigError, DataError
from .ontology import DONTCARE, Ontology

# Match-count buckets {0, 1, 2-4, 5-10, >10} -> ids 0..4.
MATCH_BUCKETS = 5

_NAME_ADJECTIVES = (
    "golden", "silver", "blue", "red", "royal", "old", "little", "grand",
    "happy", "lucky", "green", "white", "black", "copper", "velvet",
)
_NAME_NOUNS = (
    "lion", "dragon", "garden", "house", "kitchen", "table", "fork",
    "lantern", "orchid", "anchor", "barrel", "olive", "pepper", "spoon",
    "willow",
)
_STREETS = (
    "mill", "bridge", "castle", "station", "market", "chapel", "orchard",
    "river", "garden", "victoria",
)


@dataclass(frozen=True)
class Venue:
    id: int
    name: str
    food: str
    pricerange: str
    area: str
    phone: str
    address: str
    postcode: str


@dataclass(frozen=True)
class DbQuery:
    """One value-or-dontcare constraint per informable slot."""

    constraints: tuple[tuple[str, str], ...]

    @classmethod
    def from_dict(cls, ontology: Ontology, constraints: dict[str, str]) -> "DbQuery":
        items = []
        for slot in ontology.informable_slots:
            value = constraints.get(slot, DONTCARE)
            if not ontology.is_legal(slot, value):
                raise DataError(f"illegal value {value!r} for slot {slot!r}")
            items.append((slot, value))
        return cls(constraints=tuple(items))

    def as_dict(self) -> dict[str, str]:
        return dict(self.constraints)


class VenueDatabase:
    """Immutable venue collection; safe for concurrent reads."""

    def __init__(self, ontology: Ontology, venues: list[Venue]):
        ids = [v.id for v in venues]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate venue ids")
        for v in venues:
            for slot in ontology.informable_slots:
                value = getattr(v, slot)
                if value == DONTCARE or not ontology.is_legal(slot, value):
                    raise DataError(
                        f"venue {v.id} has illegal {slot} value {value!r}"
                    )
        self.ontology = ontology
        self.venues = tuple(sorted(venues, key=lambda v: v.id))

    def __len__(self) -> int:
        return len(self.venues)

    def query(self, q: DbQuery) -> list[Venue]:
        """Venues matching every non-dontcare constraint, ordered by id."""
        constraints = [(s, v) for s, v in q.constraints if v != DONTCARE]
        return [
            venue
            for venue in self.venues
            if all(getattr(venue, slot) == value for slot, value in constraints)
        ]

    def no_match_pair(self) -> tuple[str, str] | None:
        """First (food, area) pair, in ontology order, with zero venues."""
        occupied = {(v.food, v.area) for v in self.venues}
        for food in self.ontology.constraint_values("food"):
            for area in self.ontology.constraint_values("area"):
                if (food, area) not in occupied:
                    return food, area
        return None


def match_bucket(count: int) -> int:
    """Bucket a match count into {0, 1, 2-4, 5-10, >10} -> 0..4."""
    if count < 0:
        raise ConfigError("match count must be non-negative")
    if count == 0:
        return 0
    if count == 1:
        return 1
    if count <= 4:
        return 2
    if count <= 10:
        return 3
    return 4


def generate_database(ontology: Ontology, seed: int, n_venues: int) -> VenueDatabase:
    """Sample a synthetic venue database, deterministic in the seed.

    One (food, area) pair is reserved and kept empty so that no-match
    dialogues can occur. Constraint fields are uniform over the ontology's
    non-dontcare values.
    """
    if n_venues < 1:
        raise ConfigError("cannot generate an empty database")
    rng = np.random.default_rng(seed)
    foods = ontology.constraint_values("food")
    prices = ontology.constraint_values("pricerange")
    areas = ontology.constraint_values("area")
    reserved = (foods[-1], areas[-1])

    venues = []
    names_taken = set()
    for i in range(n_venues):
        food = foods[rng.integers(len(foods))]
        area = areas[rng.integers(len(areas))]
        while (food, area) == reserved:
            food = foods[rng.integers(len(foods))]
            area = areas[rng.integers(len(areas))]
        price = prices[rng.integers(len(prices))]
        adjective = _NAME_ADJECTIVES[rng.integers(len(_NAME_ADJECTIVES))]
        noun = _NAME_NOUNS[rng.integers(len(_NAME_NOUNS))]
        name = f"the {adjective} {noun}"
        if name in names_taken:
            name = f"{name} {sum(n.startswith(name) for n in names_taken) + 1}"
        names_taken.add(name)
        phone = "01223 " + "".join(str(rng.integers(10)) for _ in range(6))
        street = _STREETS[rng.integers(len(_STREETS))]
        address = f"{int(rng.integers(1, 200))} {street} street"
        letters = "".join(chr(ord("a") + rng.integers(26)) for _ in range(2))
        postcode = f"cb{int(rng.integers(1, 6))} {int(rng.integers(10))}{letters}"
        venues.append(
            Venue(
                id=i, name=name, food=food, pricerange=price, area=area,
                phone=phone, address=address, postcode=postcode,
            )
        )
    return VenueDatabase(ontology, venues)


def save_database(db: VenueDatabase, path: str) -> None:
    """One flat JSON object per line, UTF-8."""
    with open(path, "w", encoding="utf-8") as fh:
        for venue in db.venues:
            fh.write(json.dumps(asdict(venue), sort_keys=True))
            fh.write("\n")


def load_database(path: str, ontology: Ontology) -> VenueDatabase:
    venues = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                venues.append(Venue(**record))
            except (json.JSONDecodeError, TypeError) as exc:
                raise DataError(f"{path}: malformed venue record at line {lineno}") from exc
    if not venues:
        raise DataError(f"{path}: empty venue database")
    return VenueDatabase(ontology, venues)
