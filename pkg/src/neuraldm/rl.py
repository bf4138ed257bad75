"""Episodic reinforcement learning: returns, replay, REINFORCE and the
natural-gradient (eNAC) update.

The natural-gradient direction is obtained without forming the Fisher matrix:
per episode, the summed score function plus an intercept regresses the
normalized total return, and the regression weights are the update direction.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import policy as policy_net
from .actions import MasterAction
from .exceptions import ConfigError, NumericError

logger = logging.getLogger(__name__)

# Return-normalization anchors: a failed dialogue at the 30-turn cap scores
# -30; a one-turn success scores 20 - 1 = 19.
R_MIN = -30.0
R_MAX = 19.0
RETURN_SPAN = R_MAX - R_MIN

TRAIN_STREAM = 0
EVAL_STREAM = 1
SELECT_STREAM = 2


@dataclass(frozen=True)
class Transition:
    features: np.ndarray
    action: Any
    reward: float


@dataclass(frozen=True)
class Episode:
    transitions: tuple[Transition, ...]
    success: bool
    total_return: float

    @classmethod
    def from_steps(
        cls, steps: Sequence[tuple[np.ndarray, Any, float]], success: bool
    ) -> "Episode":
        transitions = tuple(Transition(f, a, float(r)) for f, a, r in steps)
        return cls(
            transitions=transitions,
            success=success,
            total_return=float(sum(t.reward for t in transitions)),
        )

    def __len__(self) -> int:
        return len(self.transitions)

    def stacked(self) -> tuple[np.ndarray, list]:
        xs = np.stack([t.features for t in self.transitions])
        return xs, [t.action for t in self.transitions]


@dataclass(frozen=True)
class RLConfig:
    gamma: float = 1.0
    epsilon: float = 0.1
    minibatch: int = 32
    pool_capacity: int = 2000
    step_size: float = 0.5
    ridge: float = 1e-6
    grad_norm_clip: float = 5.0
    update_every: int = 16
    total_dialogues: int = 6000
    algorithm: str = "enac"

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must lie in (0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if self.minibatch > self.pool_capacity:
            raise ConfigError("minibatch cannot exceed the pool capacity")
        if self.algorithm not in ("enac", "reinforce"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")


class ReplayPool:
    """Bounded episode buffer; eviction is oldest-first."""

    def __init__(self, capacity: int = 2000):
        if capacity < 1:
            raise ConfigError("pool capacity must be positive")
        self.capacity = capacity
        self._buffer: deque[Episode] = deque(maxlen=capacity)

    def push(self, episode: Episode) -> None:
        self._buffer.append(episode)

    def __len__(self) -> int:
        return len(self._buffer)

    def episodes(self) -> tuple[Episode, ...]:
        return tuple(self._buffer)

    def sample(self, n: int, rng: np.random.Generator) -> list[Episode]:
        """Uniform sample without replacement."""
        if n > len(self._buffer):
            raise ConfigError(f"cannot sample {n} episodes from a pool of {len(self._buffer)}")
        idx = rng.choice(len(self._buffer), size=n, replace=False)
        return [self._buffer[int(i)] for i in idx]


def returns(episode: Episode, gamma: float) -> list[float]:
    """Per-step cumulative discounted returns, by backward recursion."""
    if len(episode) == 0:
        raise ConfigError("cannot compute returns of an empty episode")
    out = [0.0] * len(episode)
    acc = 0.0
    for t in range(len(episode) - 1, -1, -1):
        acc = episode.transitions[t].reward + gamma * acc
        out[t] = acc
    return out


def normalize_return(r: float) -> float:
    """Affine map of total returns onto [0, 1], clamped at the ends."""
    if not np.isfinite(r):
        raise NumericError("cannot normalize a non-finite return")
    return float(min(max((r - R_MIN) / RETURN_SPAN, 0.0), 1.0))


class NeuralPolicyModel:
    """Adapter exposing the policy network to the generic RL loop."""

    def flatten(self, params: policy_net.PolicyParams) -> np.ndarray:
        return params.flatten()

    def unflatten(self, theta: np.ndarray) -> policy_net.PolicyParams:
        return policy_net.PolicyParams.unflatten(theta)

    def act(
        self,
        params: policy_net.PolicyParams,
        features: np.ndarray,
        mode: str,
        rng: np.random.Generator | None,
        epsilon: float,
    ) -> MasterAction:
        dist = policy_net.forward(params, features)
        return policy_net.select_action(dist, mode=mode, rng=rng, epsilon=epsilon)

    def episode_score(self, params: policy_net.PolicyParams, episode: Episode) -> np.ndarray:
        xs, actions = episode.stacked()
        return policy_net.grad_log_prob_sum(params, xs, actions)

    def step_grads(self, params: policy_net.PolicyParams, episode: Episode) -> list[np.ndarray]:
        return [
            policy_net.grad_log_prob(params, t.features, t.action)
            for t in episode.transitions
        ]


def reinforce_gradient(
    batch: Sequence[Episode],
    params: Any,
    model: NeuralPolicyModel | None = None,
    gamma: float = 1.0,
) -> np.ndarray:
    """Likelihood-ratio policy gradient over a batch of episodes.

    Per-step returns are divided by the [R_MIN, R_MAX] normalization span so
    their scale matches the normalized targets used by the natural-gradient
    path, without the shift (zero returns contribute nothing). Episodes are
    weighted 1/T_i each, and the batch is averaged.
    """
    if not batch:
        raise ConfigError("reinforce_gradient needs a non-empty batch")
    model = model or NeuralPolicyModel()
    total: np.ndarray | None = None
    for episode in batch:
        rs = returns(episode, gamma)
        grads = model.step_grads(params, episode)
        ep_sum = sum(
            g * (r / RETURN_SPAN) for g, r in zip(grads, rs)
        ) / len(episode)
        total = ep_sum if total is None else total + ep_sum
    return total / len(batch)


def enac_step(
    batch: Sequence[Episode],
    params: Any,
    cfg: RLConfig,
    model: NeuralPolicyModel | None = None,
) -> tuple[np.ndarray, float]:
    """Natural-gradient direction from the episodic least-squares system.

    Row n is [sum_t grad log pi(a_t|s_t), 1]; the target is the normalized
    total return. Solves the ridge-regularized normal equations; when there
    are fewer episodes than parameters the algebraically identical dual form
    (Gram matrix of size n) is used. Returns (direction w, intercept C).
    """
    if len(batch) < 2:
        raise ConfigError("enac_step needs at least two episodes")
    model = model or NeuralPolicyModel()
    rows = [np.append(model.episode_score(params, ep), 1.0) for ep in batch]
    design = np.stack(rows)
    targets = np.array([normalize_return(ep.total_return) for ep in batch])
    if not np.all(np.isfinite(design)):
        raise NumericError("non-finite score features in eNAC system")

    n, p = design.shape
    try:
        if n >= p:
            gram = design.T @ design + cfg.ridge * np.eye(p)
            solution = np.linalg.solve(gram, design.T @ targets)
        else:
            gram = design @ design.T + cfg.ridge * np.eye(n)
            solution = design.T @ np.linalg.solve(gram, targets)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eNAC least-squares system is singular: {exc}") from exc
    if not np.all(np.isfinite(solution)):
        raise NumericError("eNAC solution is non-finite")
    return solution[:-1], float(solution[-1])


@dataclass(frozen=True)
class CurveRecord:
    dialogues: int
    ser: float
    success_rate: float
    mean_return: float
    mean_turns: float


@dataclass
class RLResult:
    params: Any  # best checkpoint by selection-stream evaluation
    curve: list[CurveRecord] = field(default_factory=list)
    final_params: Any = None  # parameters after the last update


def _clip(direction: np.ndarray, max_norm: float) -> np.ndarray:
    norm = float(np.linalg.norm(direction))
    if norm > max_norm > 0:
        return direction * (max_norm / norm)
    return direction


def evaluate_policy(
    env,
    params: Any,
    n_dialogues: int,
    model: NeuralPolicyModel | None = None,
    stream: int = EVAL_STREAM,
) -> tuple[float, float, float]:
    """Greedy success rate, mean return and mean turns over a fixed eval set."""
    model = model or NeuralPolicyModel()

    def actor(features, dm, rng):
        return model.act(params, features, "greedy", rng, 0.0)

    successes = 0
    total_return = 0.0
    total_turns = 0
    for i in range(n_dialogues):
        episode = env.run_episode(actor, key=(stream, i))
        successes += int(episode.success)
        total_return += episode.total_return
        total_turns += len(episode)
    return (
        successes / n_dialogues,
        total_return / n_dialogues,
        total_turns / n_dialogues,
    )


def rl_train(
    env,
    params0: Any,
    cfg: RLConfig,
    model: NeuralPolicyModel | None = None,
    seed: int = 0,
    eval_every: int = 500,
    eval_n: int = 500,
    on_checkpoint: Callable[[CurveRecord], None] | None = None,
) -> RLResult:
    """Episodic policy-gradient training against a dialogue environment.

    Collects update_every episodes under epsilon-exploration, pushes them to
    the replay pool, samples a minibatch, and steps along the (clipped) eNAC
    or REINFORCE direction. Every eval_every dialogues the greedy policy is
    evaluated on a fixed eval set and a curve record is appended; the curve
    always includes the starting point.

    The returned parameters are the checkpoint that scored best on a
    selection stream disjoint from the curve's evaluation stream (the RL
    analogue of early stopping), so a policy that noise cannot improve comes
    back essentially unchanged.
    """
    model = model or NeuralPolicyModel()
    theta = model.flatten(params0).copy()
    params = model.unflatten(theta)
    pool = ReplayPool(cfg.pool_capacity)
    sample_rng = np.random.default_rng((seed, 2))
    ser = float(getattr(env, "ser", float("nan")))
    curve: list[CurveRecord] = []
    best_theta = theta.copy()
    best_score = -np.inf

    def checkpoint(dialogues_seen: int) -> None:
        nonlocal best_theta, best_score
        rate, mean_return, mean_turns = evaluate_policy(env, params, eval_n, model)
        record = CurveRecord(dialogues_seen, ser, rate, mean_return, mean_turns)
        curve.append(record)
        select_rate, select_return, _ = evaluate_policy(
            env, params, eval_n, model, stream=SELECT_STREAM
        )
        # Success decides; mean return breaks ties toward shorter dialogues.
        score = select_rate + 1e-4 * select_return
        if score > best_score:
            best_score = score
            best_theta = theta.copy()
        if on_checkpoint is not None:
            on_checkpoint(record)

    checkpoint(0)
    for d in range(cfg.total_dialogues):
        def actor(features, dm, rng):
            return model.act(params, features, "epsilon", rng, cfg.epsilon)

        try:
            episode = env.run_episode(actor, key=(TRAIN_STREAM, d))
        except Exception:
            logger.exception("episode %d failed; discarding", d)
            continue
        pool.push(episode)

        if (d + 1) % cfg.update_every == 0 and len(pool) >= 2 and cfg.step_size != 0.0:
            batch = pool.sample(min(cfg.minibatch, len(pool)), sample_rng)
            if cfg.algorithm == "enac" and len(batch) >= 2:
                direction, _ = enac_step(batch, params, cfg, model)
            else:
                direction = reinforce_gradient(batch, params, model, cfg.gamma)
            theta = theta + cfg.step_size * _clip(direction, cfg.grad_norm_clip)
            params = model.unflatten(theta)

        if (d + 1) % eval_every == 0:
            checkpoint(d + 1)

    if cfg.total_dialogues % eval_every != 0:
        checkpoint(cfg.total_dialogues)
    return RLResult(
        params=model.unflatten(best_theta),
        curve=curve,
        final_params=model.unflatten(theta),
    )


def rl_train_offline(
    episodes: Sequence[Episode],
    params0: Any,
    cfg: RLConfig,
    model: NeuralPolicyModel | None = None,
    seed: int = 0,
) -> Any:
    """Replay-only training from pre-collected episodes (e.g. rated human
    dialogues): fills the pool once, then applies one update per
    update_every episodes."""
    if not episodes:
        raise ConfigError("offline training needs at least one episode")
    model = model or NeuralPolicyModel()
    theta = model.flatten(params0).copy()
    params = model.unflatten(theta)
    pool = ReplayPool(cfg.pool_capacity)
    for ep in episodes:
        pool.push(ep)
    sample_rng = np.random.default_rng((seed, 2))
    n_updates = max(1, len(episodes) // cfg.update_every)
    for _ in range(n_updates):
        if len(pool) < 2 or cfg.step_size == 0.0:
            break
        batch = pool.sample(min(cfg.minibatch, len(pool)), sample_rng)
        if cfg.algorithm == "enac" and len(batch) >= 2:
            direction, _ = enac_step(batch, params, cfg, model)
        else:
            direction = reinforce_gradient(batch, params, model, cfg.gamma)
        theta = theta + cfg.step_size * _clip(direction, cfg.grad_norm_clip)
        params = model.unflatten(theta)
    return params
