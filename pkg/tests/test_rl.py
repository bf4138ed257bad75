"""Returns, normalization, replay, REINFORCE, eNAC, and the training loop."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuraldm import policy
from neuraldm.actions import MasterAction
from neuraldm.exceptions import ConfigError
from neuraldm.rl import (
    R_MAX,
    R_MIN,
    RETURN_SPAN,
    Episode,
    NeuralPolicyModel,
    ReplayPool,
    RLConfig,
    Transition,
    enac_step,
    normalize_return,
    reinforce_gradient,
    returns,
    rl_train,
    rl_train_offline,
)


def episode_from_rewards(rewards, success=False):
    steps = [(np.zeros(48), MasterAction("bye"), r) for r in rewards]
    return Episode.from_steps(steps, success=success)


# --- returns -----------------------------------------------------------------

def test_returns_single_transition():
    assert returns(episode_from_rewards([5.0]), 0.9) == [5.0]


def test_returns_paper_shape():
    # Eight turns at -1 with the +20 success bonus on the last: R_0 = 12.
    rewards = [-1.0] * 7 + [19.0]
    rs = returns(episode_from_rewards(rewards, success=True), 1.0)
    assert rs[0] == pytest.approx(12.0)
    assert rs[-1] == pytest.approx(19.0)


def test_returns_discounted_hand_case():
    rs = returns(episode_from_rewards([-1.0, -1.0, -1.0]), 0.5)
    assert rs == pytest.approx([-1.75, -1.5, -1.0])


def test_returns_empty_rejected():
    with pytest.raises(ConfigError):
        returns(Episode(transitions=(), success=False, total_return=0.0), 1.0)


# --- normalization -----------------------------------------------------------

def test_normalize_endpoints():
    assert normalize_return(R_MIN) == 0.0
    assert normalize_return(R_MAX) == 1.0
    assert normalize_return(-5.5) == pytest.approx(0.5)


def test_normalize_clamps():
    assert normalize_return(-100.0) == 0.0
    assert normalize_return(100.0) == 1.0


@given(st.floats(min_value=-60, max_value=60), st.floats(min_value=-60, max_value=60))
@settings(max_examples=100, deadline=None)
def test_normalize_monotone(a, b):
    if a <= b:
        assert normalize_return(a) <= normalize_return(b)


# --- replay pool ---------------------------------------------------------------

def test_pool_eviction_order():
    pool = ReplayPool(capacity=2000)
    episodes = [episode_from_rewards([float(i)]) for i in range(2001)]
    for e in episodes:
        pool.push(e)
    assert len(pool) == 2000
    stored = pool.episodes()
    assert stored[0] is episodes[1]  # the first episode is gone
    assert stored[-1] is episodes[-1]


def test_pool_sampling_uniform_without_replacement():
    pool = ReplayPool(capacity=10)
    for i in range(10):
        pool.push(episode_from_rewards([float(i)]))
    rng = np.random.default_rng(0)
    batch = pool.sample(10, rng)
    assert sorted(e.total_return for e in batch) == [float(i) for i in range(10)]
    with pytest.raises(ConfigError):
        pool.sample(11, rng)


# --- REINFORCE ----------------------------------------------------------------

def test_reinforce_zero_returns_zero_gradient():
    params = policy.init_params(0)
    episodes = [episode_from_rewards([0.0, 0.0]), episode_from_rewards([0.0])]
    grad = reinforce_gradient(episodes, params)
    assert np.array_equal(grad, np.zeros(policy.N_PARAMS))


def test_reinforce_single_step_collapse(rng):
    params = policy.init_params(1)
    x = rng.random(48)
    action = MasterAction("request", query_slot="food")
    episode = Episode.from_steps([(x, action, 5.0)], success=False)
    grad = reinforce_gradient([episode], params)
    expected = policy.grad_log_prob(params, x, action) * (5.0 / RETURN_SPAN)
    assert np.allclose(grad, expected, atol=1e-12)


def test_reinforce_duplicate_episodes_average_invariant(rng):
    params = policy.init_params(2)
    x = rng.random(48)
    episode = Episode.from_steps(
        [(x, MasterAction("bye"), -1.0), (rng.random(48), MasterAction("bye"), 19.0)],
        success=True,
    )
    one = reinforce_gradient([episode], params)
    two = reinforce_gradient([episode, episode], params)
    assert np.allclose(one, two, atol=1e-12)


# --- eNAC ----------------------------------------------------------------------

class ToyModel:
    """Linear-softmax bandit-style policy over `n` parameters, for oracles."""

    def __init__(self, n):
        self.n = n

    def flatten(self, params):
        return np.asarray(params, dtype=float)

    def unflatten(self, theta):
        return np.asarray(theta, dtype=float)

    def episode_score(self, params, episode):
        return np.sum([t.features for t in episode.transitions], axis=0)

    def step_grads(self, params, episode):
        return [t.features for t in episode.transitions]

    def act(self, params, features, mode, rng, epsilon):
        raise NotImplementedError


def toy_episode(score, total):
    steps = [(np.asarray(score, dtype=float), 0, float(total))]
    return Episode.from_steps(steps, success=False)


def ridge_oracle(design, targets, ridge):
    """Independent route: pseudo-inverse of the ridge-augmented system."""
    n, p = design.shape
    augmented = np.vstack([design, np.sqrt(ridge) * np.eye(p)])
    rhs = np.concatenate([targets, np.zeros(p)])
    return np.linalg.pinv(augmented) @ rhs


def test_enac_diagonal_design():
    model = ToyModel(5)
    cfg = RLConfig(ridge=1e-3, minibatch=2, pool_capacity=10)
    batch = []
    targets = [-10.0, -2.0, 5.0, 12.0, 19.0]
    for k, r in enumerate(targets):
        score = np.zeros(5)
        score[k] = 1.0
        batch.append(toy_episode(score, r))
    w, c = enac_step(batch, np.zeros(5), cfg, model)
    design = np.hstack([np.eye(5), np.ones((5, 1))])
    normalized = np.array([normalize_return(r) for r in targets])
    oracle = ridge_oracle(design, normalized, cfg.ridge)
    assert np.max(np.abs(np.append(w, c) - oracle)) <= 1e-8
    # With a diagonal design each weight is the target less the shared offset.
    assert np.max(np.abs(w - (normalized - c))) <= 0.05


def test_enac_identical_rows_consistent_system():
    model = ToyModel(4)
    cfg = RLConfig(ridge=1e-6, minibatch=2, pool_capacity=10)
    score = np.array([1.0, -2.0, 0.5, 3.0])
    batch = [toy_episode(score, -5.5) for _ in range(4)]
    w, c = enac_step(batch, np.zeros(4), cfg, model)
    residual = float(score @ w + c - normalize_return(-5.5))
    assert abs(residual) <= 1e-8


def test_enac_matches_pinv_oracle_random_batches():
    model = ToyModel(10)
    cfg = RLConfig(ridge=1e-3, minibatch=2, pool_capacity=10)
    rng = np.random.default_rng(123)
    for _ in range(10):
        batch = [
            toy_episode(rng.normal(size=10), float(rng.uniform(R_MIN, R_MAX)))
            for _ in range(5)
        ]
        w, c = enac_step(batch, np.zeros(10), cfg, model)
        design = np.stack([np.append(model.episode_score(None, e), 1.0) for e in batch])
        targets = np.array([normalize_return(e.total_return) for e in batch])
        oracle = ridge_oracle(design, targets, cfg.ridge)
        assert np.max(np.abs(np.append(w, c) - oracle)) <= 1e-8


def test_enac_least_squares_beats_zero_solution():
    model = ToyModel(6)
    cfg = RLConfig(ridge=1e-6, minibatch=2, pool_capacity=10)
    rng = np.random.default_rng(5)
    batch = [toy_episode(rng.normal(size=6), float(rng.uniform(-20, 15))) for _ in range(8)]
    w, c = enac_step(batch, np.zeros(6), cfg, model)
    design = np.stack([np.append(model.episode_score(None, e), 1.0) for e in batch])
    targets = np.array([normalize_return(e.total_return) for e in batch])
    fit = np.linalg.norm(design @ np.append(w, c) - targets)
    assert fit <= np.linalg.norm(targets)


def test_enac_needs_two_episodes():
    model = ToyModel(3)
    with pytest.raises(ConfigError):
        enac_step([toy_episode(np.ones(3), 1.0)], np.zeros(3), RLConfig(), model)


# --- bandit sanity -------------------------------------------------------------

class BanditModel:
    """One parameter, two actions: p(a=1) = sigmoid(theta)."""

    def flatten(self, params):
        return np.asarray(params, dtype=float)

    def unflatten(self, theta):
        return np.asarray(theta, dtype=float)

    def act(self, params, features, mode, rng, epsilon):
        p1 = 1.0 / (1.0 + np.exp(-float(params[0])))
        if mode == "greedy":
            return int(p1 >= 0.5)
        return int(rng.random() < p1)

    def step_grads(self, params, episode):
        p1 = 1.0 / (1.0 + np.exp(-float(params[0])))
        return [
            np.array([t.action - p1], dtype=float) for t in episode.transitions
        ]

    def episode_score(self, params, episode):
        return np.sum(self.step_grads(params, episode), axis=0)


class BanditEnv:
    """Arm 1 pays 10, arm 0 pays 0; one step per episode."""

    ser = 0.0

    def __init__(self, model, theta_box):
        self.model = model
        self.theta_box = theta_box

    def run_episode(self, actor, key):
        rng = np.random.default_rng((99, *key))
        action = actor(np.zeros(1), None, rng)
        reward = 10.0 if action == 1 else 0.0
        return Episode.from_steps([(np.zeros(1), action, reward)], success=reward > 0)


def test_bandit_reinforce_raises_better_arm_probability():
    model = BanditModel()
    theta0 = np.array([0.0])
    env = BanditEnv(model, theta0)
    cfg = RLConfig(
        algorithm="reinforce",
        total_dialogues=2000,
        step_size=5.0,
        update_every=10,
        minibatch=10,
        pool_capacity=50,
        epsilon=0.1,
    )
    result = rl_train(env, theta0, cfg, model=model, seed=3, eval_every=2000, eval_n=50)
    p1_before = 1.0 / (1.0 + np.exp(-theta0[0]))
    p1_after = 1.0 / (1.0 + np.exp(-float(result.final_params[0])))
    assert p1_after > p1_before + 0.2


# --- rl_train mechanics ---------------------------------------------------------

def test_rl_train_zero_step_is_identity(db, tiny_model):
    from neuraldm.dialogue import SimulatedEnvironment
    from neuraldm.simulator import ErrorModel

    env = SimulatedEnvironment(db, ErrorModel(ser=0.3), seed=4)
    cfg = RLConfig(total_dialogues=64, step_size=0.0)
    result = rl_train(env, tiny_model, cfg, seed=8, eval_every=32, eval_n=20)
    assert np.array_equal(result.params.flatten(), tiny_model.flatten())
    rates = {r.success_rate for r in result.curve}
    assert len(rates) == 1  # flat curve


def test_rl_train_deterministic(db, tiny_model):
    from neuraldm.dialogue import SimulatedEnvironment
    from neuraldm.simulator import ErrorModel

    def run():
        env = SimulatedEnvironment(db, ErrorModel(ser=0.3), seed=4)
        cfg = RLConfig(total_dialogues=64, step_size=0.5)
        return rl_train(env, tiny_model, cfg, seed=8, eval_every=64, eval_n=20)

    a, b = run(), run()
    assert np.array_equal(a.params.flatten(), b.params.flatten())
    assert a.curve == b.curve


def test_rl_train_offline_updates_params(db, tiny_model):
    from neuraldm.dialogue import SimulatedEnvironment
    from neuraldm.simulator import ErrorModel
    from neuraldm.baseline import baseline_act

    env = SimulatedEnvironment(db, ErrorModel(ser=0.2), seed=12)

    def actor(features, dm, rng):
        return baseline_act(db.ontology, dm.state, db)

    episodes = [env.run_episode(actor, key=(0, i)) for i in range(40)]
    cfg = RLConfig(update_every=16, minibatch=16, step_size=0.5)
    trained = rl_train_offline(episodes, tiny_model, cfg, seed=2)
    assert not np.array_equal(trained.flatten(), tiny_model.flatten())


def test_rl_config_validation():
    with pytest.raises(ConfigError):
        RLConfig(gamma=0.0)
    with pytest.raises(ConfigError):
        RLConfig(epsilon=1.5)
    with pytest.raises(ConfigError):
        RLConfig(minibatch=64, pool_capacity=32)
    with pytest.raises(ConfigError):
        RLConfig(algorithm="q-learning")


def test_rl_train_discards_failing_episodes(db, tiny_model, caplog):
    import logging

    from neuraldm.dialogue import SimulatedEnvironment
    from neuraldm.simulator import ErrorModel

    inner = SimulatedEnvironment(db, ErrorModel(ser=0.1), seed=4)

    class FlakyEnv:
        ser = 0.1

        def run_episode(self, actor, key, **kwargs):
            stream, index = key
            if stream == 0 and index % 3 == 0:
                raise RuntimeError("synthetic environment failure")
            return inner.run_episode(actor, key, **kwargs)

    cfg = RLConfig(total_dialogues=24, step_size=0.1, update_every=8, minibatch=8)
    with caplog.at_level(logging.ERROR, logger="neuraldm.rl"):
        result = rl_train(FlakyEnv(), tiny_model, cfg, seed=1, eval_every=24, eval_n=10)
    assert result.params is not None
    assert any("discarding" in message for message in caplog.messages)
