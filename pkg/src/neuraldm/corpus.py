"""Labeled dialogue corpus: generation from baseline-vs-simulator runs,
line-delimited storage, and the 4:1:1 split."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .actions import DIA_ACTS, QUERY_SLOTS, labels_to_action
from .baseline import BaselineConfig, baseline_act
from .database import VenueDatabase
from .dialogue import SimulatedEnvironment, transcript_record
from .exceptions import ConfigError, DataError
from .policy import INPUT_DIM
from .simulator import DEFAULT_PATIENCE, ErrorModel

CORPUS_SCHEMA = "corpus/v1"

SPLITS = ("train", "valid", "test")


@dataclass(frozen=True)
class LabeledTurn:
    features: np.ndarray
    label_dia: int
    label_query: int
    label_offer: tuple[int, ...]

    def action(self):
        """Decode the label triple; raises if it is not a legal action."""
        return labels_to_action(self.label_dia, self.label_query, self.label_offer)


@dataclass(frozen=True)
class DialogueRecord:
    dialogue_id: int
    split: str
    success: bool
    turns: tuple[LabeledTurn, ...]


@dataclass(frozen=True)
class DialogueCorpus:
    dialogues: tuple[DialogueRecord, ...]
    meta: dict

    def partition(self, split: str) -> list[DialogueRecord]:
        if split not in SPLITS:
            raise ConfigError(f"unknown split {split!r}")
        return [d for d in self.dialogues if d.split == split]

    def stacked(self, split: str) -> list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
        """Per-dialogue (features, dia, query, offer) arrays for training."""
        out = []
        for d in self.partition(split):
            xs = np.stack([t.features for t in d.turns])
            out.append(
                (
                    xs,
                    np.array([t.label_dia for t in d.turns]),
                    np.array([t.label_query for t in d.turns]),
                    np.array([t.label_offer for t in d.turns], dtype=float),
                )
            )
        return out

    def flat(self, split: str) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """All turns of a partition stacked together."""
        blocks = self.stacked(split)
        if not blocks:
            raise ConfigError(f"partition {split!r} is empty")
        return tuple(np.concatenate([b[i] for b in blocks]) for i in range(4))


def split_sizes(n: int) -> tuple[int, int, int]:
    """4:1:1 dialogue counts, each within one of the exact ratio."""
    train = round(n * 4 / 6)
    valid = round(n / 6)
    return train, valid, n - train - valid


def generate_corpus(
    db: VenueDatabase,
    n_dialogues: int,
    ser: float,
    seed: int,
    baseline_cfg: BaselineConfig = BaselineConfig(),
    patience: int = DEFAULT_PATIENCE,
    transcript_path: str | None = None,
) -> DialogueCorpus:
    """Run baseline-vs-simulator dialogues and label each turn with the
    baseline's action. Deterministic in the seed, including the split.

    With transcript_path set, one structured record per dialogue (goal,
    clean and noisy acts, system turns, success flag) is also written, for
    debugging the simulator and error channel."""
    if n_dialogues < 1:
        raise ConfigError("need at least one dialogue")
    env = SimulatedEnvironment(db, ErrorModel(ser=ser), seed=seed, patience=patience)
    ontology = db.ontology

    def actor(features, dm, rng):
        return baseline_act(ontology, dm.state, db, baseline_cfg)

    n_train, n_valid, _ = split_sizes(n_dialogues)
    order = np.random.default_rng((seed, 1)).permutation(n_dialogues)
    split_of = {}
    for pos, dialogue_id in enumerate(order):
        if pos < n_train:
            split_of[int(dialogue_id)] = "train"
        elif pos < n_train + n_valid:
            split_of[int(dialogue_id)] = "valid"
        else:
            split_of[int(dialogue_id)] = "test"

    dialogues = []
    transcript_fh = open(transcript_path, "w", encoding="utf-8") if transcript_path else None
    try:
        for i in range(n_dialogues):
            if transcript_fh is not None:
                episode, transcript = env.run_episode(actor, key=(0, i), collect_transcript=True)
                record = {"dialogue": i, **transcript_record(transcript)}
                transcript_fh.write(json.dumps(record, sort_keys=True))
                transcript_fh.write("\n")
            else:
                episode = env.run_episode(actor, key=(0, i))
            turns = tuple(
                LabeledTurn(
                    features=t.features,
                    label_dia=DIA_ACTS.index(t.action.dia_act),
                    label_query=QUERY_SLOTS.index(t.action.query_slot),
                    label_offer=tuple(int(b) for b in t.action.offer_bits),
                )
                for t in episode.transitions
            )
            dialogues.append(
                DialogueRecord(
                    dialogue_id=i, split=split_of[i], success=episode.success, turns=turns
                )
            )
    finally:
        if transcript_fh is not None:
            transcript_fh.close()

    meta = {
        "schema": CORPUS_SCHEMA,
        "seed": seed,
        "ser": ser,
        "n_dialogues": n_dialogues,
        "baseline": {k: v for k, v in asdict(baseline_cfg).items()},
    }
    return DialogueCorpus(dialogues=tuple(dialogues), meta=meta)


def save_corpus(corpus: DialogueCorpus, path: str) -> None:
    """Header line, then one line per dialogue and per turn."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"kind": "header", **corpus.meta}, sort_keys=True))
        fh.write("\n")
        for d in corpus.dialogues:
            fh.write(
                json.dumps(
                    {
                        "kind": "dialogue",
                        "id": d.dialogue_id,
                        "split": d.split,
                        "success": d.success,
                        "n_turns": len(d.turns),
                    },
                    sort_keys=True,
                )
            )
            fh.write("\n")
            for t, turn in enumerate(d.turns):
                fh.write(
                    json.dumps(
                        {
                            "kind": "turn",
                            "dialogue": d.dialogue_id,
                            "turn": t,
                            "features": turn.features.tolist(),
                            "dia": turn.label_dia,
                            "query": turn.label_query,
                            "offer": list(turn.label_offer),
                        },
                        sort_keys=True,
                    )
                )
                fh.write("\n")


def load_corpus(path: str) -> DialogueCorpus:
    meta: dict | None = None
    dialogues: dict[int, dict] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed corpus record at line {lineno}") from exc
            kind = record.get("kind")
            if kind == "header":
                if record.get("schema") != CORPUS_SCHEMA:
                    raise DataError(
                        f"{path}: unknown corpus schema {record.get('schema')!r} at line {lineno}"
                    )
                meta = {k: v for k, v in record.items() if k != "kind"}
            elif kind == "dialogue":
                try:
                    dialogues[record["id"]] = {
                        "split": record["split"],
                        "success": record["success"],
                        "n_turns": record["n_turns"],
                        "turns": [],
                    }
                except KeyError as exc:
                    raise DataError(f"{path}: dialogue record at line {lineno} missing {exc}") from exc
            elif kind == "turn":
                try:
                    entry = dialogues[record["dialogue"]]
                    features = np.array(record["features"], dtype=float)
                    if features.shape != (INPUT_DIM,):
                        raise DataError(
                            f"{path}: bad feature length at line {lineno}"
                        )
                    entry["turns"].append(
                        LabeledTurn(
                            features=features,
                            label_dia=record["dia"],
                            label_query=record["query"],
                            label_offer=tuple(record["offer"]),
                        )
                    )
                except KeyError as exc:
                    raise DataError(f"{path}: turn record at line {lineno} missing {exc}") from exc
            else:
                raise DataError(f"{path}: unknown record kind {kind!r} at line {lineno}")
    if meta is None and not dialogues:
        raise DataError(f"{path}: empty corpus file")
    if meta is None:
        raise DataError(f"{path}: missing corpus header")
    records = []
    for dialogue_id in sorted(dialogues):
        entry = dialogues[dialogue_id]
        if len(entry["turns"]) != entry["n_turns"]:
            raise DataError(
                f"{path}: dialogue {dialogue_id} has {len(entry['turns'])} turns, "
                f"expected {entry['n_turns']}"
            )
        records.append(
            DialogueRecord(
                dialogue_id=dialogue_id,
                split=entry["split"],
                success=entry["success"],
                turns=tuple(entry["turns"]),
            )
        )
    return DialogueCorpus(dialogues=tuple(records), meta=meta)


def corpus_equal(a: DialogueCorpus, b: DialogueCorpus) -> bool:
    if a.meta != b.meta or len(a.dialogues) != len(b.dialogues):
        return False
    for da, db_ in zip(a.dialogues, b.dialogues):
        if (da.dialogue_id, da.split, da.success) != (db_.dialogue_id, db_.split, db_.success):
            return False
        if len(da.turns) != len(db_.turns):
            return False
        for ta, tb in zip(da.turns, db_.turns):
            if (
                not np.array_equal(ta.features, tb.features)
                or ta.label_dia != tb.label_dia
                or ta.label_query != tb.label_query
                or ta.label_offer != tb.label_offer
            ):
                return False
    return True
