"""Multi-head policy network with exact analytic gradients.

One tanh hidden layer; the output layer is two softmax partitions (dialogue
act, query slot) and six independent sigmoids (offer bits). Forward, action
sampling, log-probability and gradients are implemented directly in numpy;
there is no automatic differentiation anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .actions import (
    DIA_ACTS,
    N_OFFER_BITS,
    QUERY_ACTS,
    QUERY_SLOTS,
    MasterAction,
    masked_action,
)
from .exceptions import DataError, NumericError

INPUT_DIM = 48
HIDDEN_DIM = 32
OUTPUT_DIM = 15  # 5 dialogue acts + 4 query slots + 6 offer bits
N_PARAMS = INPUT_DIM * HIDDEN_DIM + HIDDEN_DIM + HIDDEN_DIM * OUTPUT_DIM + OUTPUT_DIM

_DIA = slice(0, 5)
_QUERY = slice(5, 9)
_OFFER = slice(9, 15)

# Probabilities are floored before taking logs, identically in the supervised
# and reinforcement paths.
PROB_FLOOR = 1e-12

CHECKPOINT_FORMAT = "policy-checkpoint/v1"

Labels = tuple[int, int, tuple[int, ...]]


@dataclass
class PolicyParams:
    """Network weights, exposed as one flat vector in a fixed order.

    Flatten order: w1 row-major, b1, w2 row-major, b2.
    """

    w1: np.ndarray  # (48, 32)
    b1: np.ndarray  # (32,)
    w2: np.ndarray  # (32, 15)
    b2: np.ndarray  # (15,)

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [self.w1.ravel(), self.b1, self.w2.ravel(), self.b2]
        )

    @classmethod
    def unflatten(cls, theta: np.ndarray) -> "PolicyParams":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (N_PARAMS,):
            raise DataError(f"parameter vector must have length {N_PARAMS}")
        if not np.all(np.isfinite(theta)):
            raise NumericError("parameter vector contains non-finite values")
        i = 0
        w1 = theta[i : i + INPUT_DIM * HIDDEN_DIM].reshape(INPUT_DIM, HIDDEN_DIM)
        i += INPUT_DIM * HIDDEN_DIM
        b1 = theta[i : i + HIDDEN_DIM]
        i += HIDDEN_DIM
        w2 = theta[i : i + HIDDEN_DIM * OUTPUT_DIM].reshape(HIDDEN_DIM, OUTPUT_DIM)
        i += HIDDEN_DIM * OUTPUT_DIM
        b2 = theta[i : i + OUTPUT_DIM]
        return cls(w1=w1.copy(), b1=b1.copy(), w2=w2.copy(), b2=b2.copy())

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


@dataclass(frozen=True)
class ActionDistribution:
    p_dia: np.ndarray  # (5,) sums to 1
    p_query: np.ndarray  # (4,) sums to 1
    p_offer: np.ndarray  # (6,) independent Bernoulli parameters


def init_params(seed: int) -> PolicyParams:
    """All weights uniform in [-0.1, 0.1], deterministic in the seed."""
    rng = np.random.default_rng(seed)
    return PolicyParams.unflatten(rng.uniform(-0.1, 0.1, size=N_PARAMS))


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _hidden(params: PolicyParams, x: np.ndarray) -> np.ndarray:
    return np.tanh(x @ params.w1 + params.b1)


def forward(params: PolicyParams, x: np.ndarray) -> ActionDistribution:
    """Evaluate the network on one 48-dim feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (INPUT_DIM,):
        raise DataError(f"feature vector must have length {INPUT_DIM}")
    if not np.all(np.isfinite(x)):
        raise NumericError("feature vector contains non-finite values")
    h = _hidden(params, x)
    z = h @ params.w2 + params.b2
    return ActionDistribution(
        p_dia=_softmax(z[_DIA]), p_query=_softmax(z[_QUERY]), p_offer=_sigmoid(z[_OFFER])
    )


def forward_batch(
    params: PolicyParams, xs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise forward pass: returns (P_dia, P_query, P_offer)."""
    h = np.tanh(xs @ params.w1 + params.b1)
    z = h @ params.w2 + params.b2
    return _softmax(z[:, _DIA]), _softmax(z[:, _QUERY]), _sigmoid(z[:, _OFFER])


def _draw_categorical(p: np.ndarray, rng: np.random.Generator) -> int:
    return int(np.searchsorted(np.cumsum(p), rng.random() * p.sum()))


def select_action(
    dist: ActionDistribution,
    mode: str = "greedy",
    rng: np.random.Generator | None = None,
    epsilon: float = 0.1,
) -> MasterAction:
    """Pick a master action from head distributions.

    greedy: per-head argmax, offer bit true iff p >= 0.5.
    sample: independent per-head draws.
    epsilon: with probability epsilon a uniform draw over all heads,
    otherwise a sample. Inactive heads are masked afterwards.
    """
    if mode == "greedy":
        dia = DIA_ACTS[int(np.argmax(dist.p_dia))]
        query = QUERY_SLOTS[int(np.argmax(dist.p_query))]
        bits = dist.p_offer >= 0.5
        return masked_action(dia, query, bits)
    if rng is None:
        raise DataError(f"mode {mode!r} requires an rng")
    if mode == "epsilon" and rng.random() < epsilon:
        dia = DIA_ACTS[int(rng.integers(len(DIA_ACTS)))]
        query = QUERY_SLOTS[int(rng.integers(len(QUERY_SLOTS)))]
        bits = rng.random(N_OFFER_BITS) < 0.5
        return masked_action(dia, query, bits)
    if mode in ("sample", "epsilon"):
        dia = DIA_ACTS[_draw_categorical(dist.p_dia, rng)]
        query = QUERY_SLOTS[_draw_categorical(dist.p_query, rng)]
        bits = rng.random(N_OFFER_BITS) < dist.p_offer
        return masked_action(dia, query, bits)
    raise DataError(f"unknown selection mode {mode!r}")


def _flog(p: np.ndarray | float) -> np.ndarray | float:
    return np.log(np.maximum(p, PROB_FLOOR))


def log_prob(params: PolicyParams, x: np.ndarray, action: MasterAction) -> float:
    """log pi(action | x); inactive heads contribute nothing."""
    dist = forward(params, x)
    lp = _flog(dist.p_dia[DIA_ACTS.index(action.dia_act)])
    if action.dia_act in QUERY_ACTS:
        lp += _flog(dist.p_query[QUERY_SLOTS.index(action.query_slot)])
    if action.dia_act == "offer":
        bits = np.asarray(action.offer_bits, dtype=float)
        lp += float(np.sum(bits * _flog(dist.p_offer) + (1 - bits) * _flog(1 - dist.p_offer)))
    return float(lp)


def _backprop(
    params: PolicyParams, x: np.ndarray, h: np.ndarray, dz: np.ndarray
) -> np.ndarray:
    """Map an output-layer delta to a flat parameter gradient."""
    dh = params.w2 @ dz
    dpre = dh * (1.0 - h * h)
    return np.concatenate(
        [np.outer(x, dpre).ravel(), dpre, np.outer(h, dz).ravel(), dz]
    )


def _logprob_delta(
    dist_dia: np.ndarray, dist_query: np.ndarray, dist_offer: np.ndarray,
    action: MasterAction,
) -> np.ndarray:
    dz = np.zeros(OUTPUT_DIM)
    dz[_DIA] = -dist_dia
    dz[DIA_ACTS.index(action.dia_act)] += 1.0
    if action.dia_act in QUERY_ACTS:
        dz[_QUERY] = -dist_query
        dz[5 + QUERY_SLOTS.index(action.query_slot)] += 1.0
    if action.dia_act == "offer":
        dz[_OFFER] = np.asarray(action.offer_bits, dtype=float) - dist_offer
    return dz


def grad_log_prob(
    params: PolicyParams, x: np.ndarray, action: MasterAction
) -> np.ndarray:
    """Exact gradient of log pi(action | x) with respect to the flat params."""
    x = np.asarray(x, dtype=float)
    h = _hidden(params, x)
    z = h @ params.w2 + params.b2
    dz = _logprob_delta(_softmax(z[_DIA]), _softmax(z[_QUERY]), _sigmoid(z[_OFFER]), action)
    return _backprop(params, x, h, dz)


def grad_log_prob_sum(
    params: PolicyParams, xs: np.ndarray, actions: list[MasterAction]
) -> np.ndarray:
    """Sum of per-step log-probability gradients over one episode (batched)."""
    xs = np.asarray(xs, dtype=float)
    h = np.tanh(xs @ params.w1 + params.b1)
    z = h @ params.w2 + params.b2
    p_dia = _softmax(z[:, _DIA])
    p_query = _softmax(z[:, _QUERY])
    p_offer = _sigmoid(z[:, _OFFER])
    dz = np.zeros_like(z)
    for t, action in enumerate(actions):
        dz[t] = _logprob_delta(p_dia[t], p_query[t], p_offer[t], action)
    return _backprop_batch(params, xs, h, dz)


def _backprop_batch(
    params: PolicyParams, xs: np.ndarray, h: np.ndarray, dz: np.ndarray
) -> np.ndarray:
    dh = dz @ params.w2.T
    dpre = dh * (1.0 - h * h)
    return np.concatenate(
        [(xs.T @ dpre).ravel(), dpre.sum(axis=0), (h.T @ dz).ravel(), dz.sum(axis=0)]
    )


def grad_supervised_loss(
    params: PolicyParams, x: np.ndarray, labels: Labels
) -> tuple[float, np.ndarray]:
    """Joint cross-entropy loss over all three heads, with its exact gradient.

    Unlike the log-probability path, every head is always active: inactive
    turns carry query label "none" and all-false offer bits.
    """
    x = np.asarray(x, dtype=float)
    loss, grad = dialogue_loss_grad(
        params,
        x[None, :],
        np.array([labels[0]]),
        np.array([labels[1]]),
        np.array([labels[2]], dtype=float),
    )
    return loss, grad


def dialogue_loss_grad(
    params: PolicyParams,
    xs: np.ndarray,
    y_dia: np.ndarray,
    y_query: np.ndarray,
    y_offer: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Summed supervised loss and gradient over a block of turns."""
    xs = np.asarray(xs, dtype=float)
    n = xs.shape[0]
    h = np.tanh(xs @ params.w1 + params.b1)
    z = h @ params.w2 + params.b2
    p_dia = _softmax(z[:, _DIA])
    p_query = _softmax(z[:, _QUERY])
    p_offer = _sigmoid(z[:, _OFFER])

    rows = np.arange(n)
    loss = float(
        -np.sum(_flog(p_dia[rows, y_dia]))
        - np.sum(_flog(p_query[rows, y_query]))
        - np.sum(y_offer * _flog(p_offer) + (1 - y_offer) * _flog(1 - p_offer))
    )

    dz = np.zeros_like(z)
    dz[:, _DIA] = p_dia
    dz[rows, y_dia] -= 1.0
    dz[:, _QUERY] = p_query
    dz[rows, 5 + y_query] -= 1.0
    dz[:, _OFFER] = p_offer - y_offer
    return loss, _backprop_batch(params, xs, h, dz)


def save_checkpoint(params: PolicyParams, path: str, seed: int | None = None) -> None:
    """Header line (format, dims, seed) then theta as little-endian float64."""
    header = {
        "format": CHECKPOINT_FORMAT,
        "input_dim": INPUT_DIM,
        "hidden_dim": HIDDEN_DIM,
        "output_dim": OUTPUT_DIM,
        "seed": seed,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(params.flatten().astype("<f8").tobytes())


def load_checkpoint(path: str) -> tuple[PolicyParams, dict]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed checkpoint header") from exc
    if header.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: unknown checkpoint format {header.get('format')!r}")
    dims = (header.get("input_dim"), header.get("hidden_dim"), header.get("output_dim"))
    if dims != (INPUT_DIM, HIDDEN_DIM, OUTPUT_DIM):
        raise DataError(f"{path}: unsupported dimensions {dims}")
    theta = np.frombuffer(payload, dtype="<f8")
    if theta.shape != (N_PARAMS,):
        raise DataError(
            f"{path}: expected {N_PARAMS} parameters, found {theta.shape[0]}"
        )
    return PolicyParams.unflatten(theta.astype(float)), header
