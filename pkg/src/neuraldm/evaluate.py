"""Evaluation harness: per-head F-measures and success-rate-vs-noise tables."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import policy as policy_net
from .dialogue import SimulatedEnvironment
from .exceptions import ConfigError, DataError
from .rl import EVAL_STREAM, CurveRecord, NeuralPolicyModel
from .simulator import ErrorModel
from .sl import corpus_f1


def eval_f1(params: policy_net.PolicyParams, dialogues) -> tuple[float, float, float]:
    """Weighted F1 of greedy predictions per head over a corpus partition."""
    if not dialogues:
        raise ConfigError("cannot evaluate an empty partition")
    xs = np.concatenate([np.stack([t.features for t in d.turns]) for d in dialogues])
    y_dia = np.concatenate([[t.label_dia for t in d.turns] for d in dialogues])
    y_query = np.concatenate([[t.label_query for t in d.turns] for d in dialogues])
    y_offer = np.concatenate(
        [[list(t.label_offer) for t in d.turns] for d in dialogues]
    ).astype(int)
    return corpus_f1(params, xs, y_dia, y_query, y_offer)


@dataclass(frozen=True)
class SuccessRow:
    ser: float
    n_dialogues: int
    success_rate: float
    std_err: float
    mean_return: float
    mean_turns: float


def _run_block(db, ser: float, seed: int, theta: np.ndarray, indices: list[int]):
    """Worker body: greedy rollout over a block of evaluation dialogues."""
    env = SimulatedEnvironment(db, ErrorModel(ser=ser), seed=seed)
    params = policy_net.PolicyParams.unflatten(theta)
    model = NeuralPolicyModel()

    def actor(features, dm, rng):
        return model.act(params, features, "greedy", rng, 0.0)

    out = []
    for i in indices:
        episode = env.run_episode(actor, key=(EVAL_STREAM, i))
        out.append((int(episode.success), episode.total_return, len(episode)))
    return out


def eval_success(
    params: policy_net.PolicyParams,
    db,
    ser_list: list[float],
    n_dialogues: int = 500,
    seed: int = 0,
    workers: int = 1,
) -> list[SuccessRow]:
    """Greedy success rate per semantic error rate, deterministic in the seed.

    The same evaluation keys are used at every error rate, so rows differ
    only through the noise channel. Binomial standard errors use the normal
    approximation.
    """
    if n_dialogues < 1:
        raise ConfigError("need at least one evaluation dialogue")
    theta = params.flatten()
    rows = []
    for ser in ser_list:
        indices = list(range(n_dialogues))
        if workers > 1:
            blocks = [indices[i::workers] for i in range(workers)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_run_block, db, ser, seed, theta, block)
                    for block in blocks
                ]
                results = [f.result() for f in futures]
            # Reassemble in dialogue-index order for a deterministic reduction.
            merged: dict[int, tuple] = {}
            for block, result in zip(blocks, results):
                merged.update(zip(block, result))
            outcomes = [merged[i] for i in indices]
        else:
            outcomes = _run_block(db, ser, seed, theta, indices)
        successes = sum(o[0] for o in outcomes)
        rate = successes / n_dialogues
        rows.append(
            SuccessRow(
                ser=ser,
                n_dialogues=n_dialogues,
                success_rate=rate,
                std_err=math.sqrt(max(rate * (1 - rate), 0.0) / n_dialogues),
                mean_return=sum(o[1] for o in outcomes) / n_dialogues,
                mean_turns=sum(o[2] for o in outcomes) / n_dialogues,
            )
        )
    return rows


_CURVE_FIELDS = ("dialogues", "ser", "success_rate", "mean_return", "mean_turns")


def emit_curve(records: list[CurveRecord], path: str, plot_path: str | None = None) -> None:
    """Write curve records as CSV plus a wide-format plot-data file.

    The plot-data file has one row per checkpoint and one success-rate column
    per error rate, consumable by any external plotter.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CURVE_FIELDS)
        for r in records:
            writer.writerow(
                [r.dialogues, repr(r.ser), repr(r.success_rate), repr(r.mean_return), repr(r.mean_turns)]
            )

    if plot_path is None:
        plot_path = path + ".plot.csv"
    sers = sorted({r.ser for r in records})
    checkpoints = sorted({r.dialogues for r in records})
    table = {(r.dialogues, r.ser): r.success_rate for r in records}
    with open(plot_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dialogues"] + [f"success_ser_{s}" for s in sers])
        for c in checkpoints:
            writer.writerow(
                [c] + [repr(table[(c, s)]) if (c, s) in table else "" for s in sers]
            )


def read_curve(path: str) -> list[CurveRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != _CURVE_FIELDS:
            raise DataError(f"{path}: unknown curve file header {header!r}")
        for row in reader:
            if not row:
                continue
            records.append(
                CurveRecord(
                    dialogues=int(row[0]),
                    ser=float(row[1]),
                    success_rate=float(row[2]),
                    mean_return=float(row[3]),
                    mean_turns=float(row[4]),
                )
            )
    return records


def success_table_csv(rows: list[SuccessRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["ser", "n_dialogues", "success_rate", "std_err", "mean_return", "mean_turns"]
        )
        for r in rows:
            writer.writerow(
                [
                    repr(r.ser), r.n_dialogues, repr(r.success_rate),
                    repr(r.std_err), repr(r.mean_return), repr(r.mean_turns),
                ]
            )
