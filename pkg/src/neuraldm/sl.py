"""Phase-I supervised training: per-dialogue Adagrad on the joint
cross-entropy loss, early stopping on a held-out split, weighted F-measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import policy as policy_net
from .exceptions import ConfigError, DataError

_QUERY_ACT_IDS = (0, 2, 3)  # request, confirm, select
_OFFER_ACT_ID = 1


@dataclass(frozen=True)
class SLConfig:
    learning_rate: float = 0.05
    adagrad_epsilon: float = 1e-8
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        # learning_rate 0 is allowed as an explicit null update.
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        if self.adagrad_epsilon <= 0 or self.max_epochs <= 0 or self.patience <= 0:
            raise ConfigError("adagrad_epsilon, max_epochs and patience must be positive")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    valid_loss: float
    f1_diaact: float
    f1_query: float
    f1_offer: float


def predict_labels(
    params: policy_net.PolicyParams, xs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Greedy per-turn predictions with inactive heads masked, as label ids."""
    p_dia, p_query, p_offer = policy_net.forward_batch(params, xs)
    dia = np.argmax(p_dia, axis=1)
    query = np.argmax(p_query, axis=1)
    query[~np.isin(dia, _QUERY_ACT_IDS)] = 3  # "none"
    offer = (p_offer >= 0.5).astype(int)
    offer[dia != _OFFER_ACT_ID] = 0
    return dia, query, offer


def weighted_f1(predictions, labels, head: str) -> float:
    """Per-class F1 averaged with class-support weights.

    For the offer head each of the six bits is a binary classification and
    the average runs over all (bit, class) pairs, weighted by support.
    """
    if head in ("diaact", "query"):
        y_pred = np.asarray(predictions)
        y_true = np.asarray(labels)
        if y_true.size == 0:
            raise DataError(f"weighted F1 of head {head!r} is undefined on empty input")
        if y_pred.shape != y_true.shape:
            raise DataError("predictions and labels must have equal length")
        return _weighted_f1_categorical(y_pred, y_true)
    if head == "offer":
        y_pred = np.asarray(predictions).reshape(-1, 6)
        y_true = np.asarray(labels).reshape(-1, 6)
        if y_true.size == 0:
            raise DataError("weighted F1 of head 'offer' is undefined on empty input")
        if y_pred.shape != y_true.shape:
            raise DataError("predictions and labels must have equal length")
        score = 0.0
        support = 0
        for k in range(6):
            for positive in (0, 1):
                s = int(np.sum(y_true[:, k] == positive))
                if s == 0:
                    continue
                score += s * _binary_f1(y_pred[:, k] == positive, y_true[:, k] == positive)
                support += s
        return score / support
    raise DataError(f"unknown head {head!r}")


def _binary_f1(pred_pos: np.ndarray, true_pos: np.ndarray) -> float:
    tp = int(np.sum(pred_pos & true_pos))
    fp = int(np.sum(pred_pos & ~true_pos))
    fn = int(np.sum(~pred_pos & true_pos))
    if 2 * tp + fp + fn == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


def _weighted_f1_categorical(y_pred: np.ndarray, y_true: np.ndarray) -> float:
    score = 0.0
    for cls in np.unique(y_true):
        support = int(np.sum(y_true == cls))
        score += support * _binary_f1(y_pred == cls, y_true == cls)
    return score / len(y_true)


def corpus_f1(
    params: policy_net.PolicyParams,
    xs: np.ndarray,
    y_dia: np.ndarray,
    y_query: np.ndarray,
    y_offer: np.ndarray,
) -> tuple[float, float, float]:
    """Weighted F1 per head. The dialogue-act head is scored on every turn;
    the query and offer heads only on turns where the label makes them
    active, mirroring how the action factorization uses them."""
    pred_dia, pred_query, pred_offer = predict_labels(params, xs)
    f1_dia = weighted_f1(pred_dia, y_dia, "diaact")
    query_rows = np.isin(y_dia, _QUERY_ACT_IDS)
    offer_rows = y_dia == _OFFER_ACT_ID
    f1_query = (
        weighted_f1(pred_query[query_rows], y_query[query_rows], "query")
        if query_rows.any()
        else 1.0
    )
    f1_offer = (
        weighted_f1(pred_offer[offer_rows], y_offer[offer_rows], "offer")
        if offer_rows.any()
        else 1.0
    )
    return f1_dia, f1_query, f1_offer


def adagrad_update(
    theta: np.ndarray,
    accumulator: np.ndarray,
    grad: np.ndarray,
    learning_rate: float,
    epsilon: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One Adagrad step; the squared-gradient accumulator only ever grows."""
    accumulator = accumulator + grad * grad
    theta = theta - learning_rate * grad / (np.sqrt(accumulator) + epsilon)
    return theta, accumulator


def train_sl(
    corpus,
    cfg: SLConfig,
    params0: policy_net.PolicyParams,
) -> tuple[policy_net.PolicyParams, list[EpochMetrics]]:
    """Adagrad-per-dialogue minimization of the joint cross-entropy loss.

    One parameter update per dialogue (gradient summed over its turns); the
    Adagrad accumulator persists across epochs. Dialogue order is reshuffled
    each epoch. Training stops when validation loss has not improved for
    cfg.patience epochs, and the parameters with the best validation loss are
    returned.
    """
    train = corpus.stacked("train")
    valid = corpus.stacked("valid")
    if not train or not valid:
        raise ConfigError("training requires non-empty train and valid partitions")

    rng = np.random.default_rng(cfg.seed)
    theta = params0.flatten().copy()
    accumulator = np.zeros_like(theta)
    params = policy_net.PolicyParams.unflatten(theta)

    valid_xs = np.concatenate([d[0] for d in valid])
    valid_dia = np.concatenate([d[1] for d in valid])
    valid_query = np.concatenate([d[2] for d in valid])
    valid_offer = np.concatenate([d[3] for d in valid])

    best_theta = theta.copy()
    best_loss = float("inf")
    epochs_without_improvement = 0
    history: list[EpochMetrics] = []

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train))
        train_loss = 0.0
        train_turns = 0
        for idx in order:
            xs, y_dia, y_query, y_offer = train[idx]
            loss, grad = policy_net.dialogue_loss_grad(params, xs, y_dia, y_query, y_offer)
            train_loss += loss
            train_turns += xs.shape[0]
            theta, accumulator = adagrad_update(
                theta, accumulator, grad, cfg.learning_rate, cfg.adagrad_epsilon
            )
            params = policy_net.PolicyParams.unflatten(theta)

        valid_loss, _ = policy_net.dialogue_loss_grad(
            params, valid_xs, valid_dia, valid_query, valid_offer
        )
        valid_loss /= len(valid_xs)
        f1_dia, f1_query, f1_offer = corpus_f1(
            params, valid_xs, valid_dia, valid_query, valid_offer
        )
        history.append(
            EpochMetrics(
                epoch=epoch,
                train_loss=train_loss / train_turns,
                valid_loss=valid_loss,
                f1_diaact=f1_dia,
                f1_query=f1_query,
                f1_offer=f1_offer,
            )
        )
        if valid_loss < best_loss:
            best_loss = valid_loss
            best_theta = theta.copy()
            epochs_without_improvement = 0
        else:
            epochs_without_improvement += 1
            if epochs_without_improvement >= cfg.patience:
                break

    return policy_net.PolicyParams.unflatten(best_theta), history


def save_metrics(history: list[EpochMetrics], path: str) -> None:
    """One comma-separated line per epoch, with a header row."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,valid_loss,f1_diaact,f1_query,f1_offer\n")
        for m in history:
            fh.write(
                f"{m.epoch},{m.train_loss!r},{m.valid_loss!r},"
                f"{m.f1_diaact!r},{m.f1_query!r},{m.f1_offer!r}\n"
            )
