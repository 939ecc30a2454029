import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polegrad.cartpole import EnvConfig
from polegrad.linear_policy import LinearPolicyParams, sigmoid
from polegrad.mc import (
    McConfig,
    McEpisodeRecord,
    initial_theta,
    returns_to_go,
    run_episode,
    sigmoid_log_prob_grad,
    train_mc,
    update_paper_faithful,
    update_reinforce,
)
from polegrad.numerics import Rng, central_diff_grad

ENV = EnvConfig()


def one_step(obs, action, pi, reward=1.0):
    o = np.array([obs], dtype=float)
    return McEpisodeRecord(o, o, np.array([action]), np.array([pi]), np.array([reward]))


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(lr=0)
    with pytest.raises(ValueError):
        McConfig(mode="other")
    with pytest.raises(ValueError):
        McConfig(mode="reinforce", gamma=0)


def test_zero_theta_always_pushes_right():
    rec = run_episode(ENV, LinearPolicyParams(np.zeros(4)), Rng(0))
    assert np.all(rec.pis == 0.5) and np.all(rec.actions == 1)


def test_record_layout():
    rng = Rng(1)
    rec = run_episode(ENV, LinearPolicyParams(initial_theta(rng)), rng)
    assert len(rec) == len(rec.obs) == len(rec.next_obs) >= 1
    # next_obs of one step is the obs the following step was chosen from
    assert np.array_equal(rec.next_obs[:-1], rec.obs[1:])
    assert np.all((rec.pis > 0) & (rec.pis < 1))
    assert rec.rewards.sum() == len(rec)


def test_run_episode_deterministic():
    theta = LinearPolicyParams([0.3, 0.1, 0.9, 0.5])
    a = run_episode(ENV, theta, Rng(4))
    b = run_episode(ENV, theta, Rng(4))
    assert np.array_equal(a.next_obs, b.next_obs) and np.array_equal(a.actions, b.actions)


def test_faithful_update_single_step():
    rec = one_step([1, 0, 0, 0], 1, 0.5)
    theta = update_paper_faithful(LinearPolicyParams(np.zeros(4)), rec, 0.02).theta
    assert np.allclose(theta, [-0.01, 0, 0, 0], rtol=1e-15)


def test_faithful_update_uses_post_step_observation():
    rec = McEpisodeRecord(np.array([[9.0, 9, 9, 9]]), np.array([[1.0, 0, 0, 0]]),
                          np.array([0]), np.array([0.5]), np.array([1.0]))
    theta = update_paper_faithful(LinearPolicyParams(np.zeros(4)), rec, 0.02).theta
    assert np.allclose(theta, [-0.01, 0, 0, 0])


def test_faithful_update_zero_lr():
    rng = Rng(2)
    rec = run_episode(ENV, LinearPolicyParams(initial_theta(rng)), rng)
    theta = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.array_equal(update_paper_faithful(LinearPolicyParams(theta), rec, 0.0).theta, theta)


def test_faithful_update_is_linear_in_record():
    rng = Rng(3)
    params = LinearPolicyParams(initial_theta(rng))
    r1 = run_episode(ENV, params, rng)
    r2 = run_episode(ENV, params, rng)
    sequential = update_paper_faithful(update_paper_faithful(params, r1, 0.02), r2, 0.02)
    joined = update_paper_faithful(params, r1.concat(r2), 0.02)
    assert np.array_equal(sequential.theta, joined.theta)
    # equal to the summed update up to round-off
    summed = params.theta + sum(0.02 * (1 - p) * -o * r for o, p, r in
                                zip(np.concatenate([r1.next_obs, r2.next_obs]),
                                    np.concatenate([r1.pis, r2.pis]), np.concatenate([r1.rewards, r2.rewards])))
    assert np.allclose(joined.theta, summed, rtol=1e-12, atol=1e-15)


def test_reinforce_update_by_hand():
    rec = one_step([1, 0, 0, 0], 0, 0.5)
    theta = update_reinforce(LinearPolicyParams([0.2, 0.3, 0.4, 0.5]), rec, 0.1, 1.0).theta
    assert np.allclose(theta, [0.2 - 0.05, 0.3, 0.4, 0.5], rtol=1e-15)


def test_saturated_action_has_no_gradient():
    assert np.allclose(sigmoid_log_prob_grad([1, 2, 3, 4], 1, 1 - 1e-15), 0, atol=1e-14)


@given(st.integers(0, 2**32), st.sampled_from([0, 1]))
@settings(max_examples=50)
def test_log_prob_gradient_matches_finite_difference(seed, action):
    rng = Rng(seed)
    theta = np.array([rng.uniform(-2, 2) for _ in range(4)])
    obs = np.array([rng.uniform(-1, 1) for _ in range(4)])

    def logp(th):
        p = sigmoid(float(th @ obs))
        return math.log(p) if action == 1 else math.log(1 - p)

    analytic = sigmoid_log_prob_grad(obs, action, sigmoid(float(theta @ obs)))
    assert np.max(np.abs(central_diff_grad(logp, theta, 1e-5) - analytic)) < 1e-6


def test_returns_to_go():
    assert np.allclose(returns_to_go([1, 1, 1], 0.5), [1.75, 1.5, 1.0])
    assert np.array_equal(returns_to_go([1, 1, 1, 1], 1.0), [4, 3, 2, 1])


@pytest.mark.parametrize("gamma", [1.0, 0.9])
def test_reinforce_update_is_gradient_of_weighted_log_likelihood(gamma):
    rng = Rng(6)
    params = LinearPolicyParams(initial_theta(rng) - 0.5)
    rec = run_episode(ENV, params, rng, sample=True)
    G = returns_to_go(rec.rewards, gamma)

    def objective(th):
        total = 0.0
        for o, a, g in zip(rec.obs, rec.actions, G):
            p = sigmoid(float(th @ o))
            total += g * (math.log(p) if a == 1 else math.log(1 - p))
        return total

    lr = 0.01
    step = (update_reinforce(params, rec, lr, gamma).theta - params.theta) / lr
    fd = central_diff_grad(objective, params.theta, 1e-5)
    assert np.max(np.abs(step - fd)) < 1e-5
    # per timestep as well
    for o, a, p, g in zip(rec.obs, rec.actions, rec.pis, G):
        single = central_diff_grad(
            lambda th: g * (math.log(sigmoid(float(th @ o))) if a == 1 else math.log(1 - sigmoid(float(th @ o)))),
            params.theta, 1e-5)
        assert np.max(np.abs(single - g * sigmoid_log_prob_grad(o, a, p))) < 1e-5


def test_train_zero_episodes():
    theta0 = np.array([0.1, 0.2, 0.3, 0.4])
    theta, lengths = train_mc(ENV, McConfig(episodes=0), theta0, Rng(0))
    assert np.array_equal(theta, theta0) and lengths == []


def test_train_lengths_bounded():
    rng = Rng(1)
    cfg = EnvConfig(max_steps=100)
    _, lengths = train_mc(cfg, McConfig(episodes=15), initial_theta(rng), rng)
    assert len(lengths) == 15 and all(1 <= n <= 100 for n in lengths)


def test_train_rejects_bad_theta():
    with pytest.raises(ValueError):
        train_mc(ENV, McConfig(), np.zeros(3), Rng(0))


def test_train_early_stop():
    rng = Rng(1)
    _, lengths = train_mc(ENV, McConfig(episodes=50), initial_theta(rng), rng, until=lambda L: len(L) == 4)
    assert len(lengths) == 4


def test_train_deterministic():
    runs = []
    for _ in range(2):
        rng = Rng(12)
        runs.append(train_mc(ENV, McConfig(episodes=20, mode="reinforce"), initial_theta(rng), rng))
    assert np.array_equal(runs[0][0], runs[1][0]) and runs[0][1] == runs[1][1]


def _good_theta():
    """Parameters that just produced a >= 400-step episode under faithful training."""
    for seed in range(100):
        rng = Rng(seed)
        params = LinearPolicyParams(initial_theta(rng))
        for _ in range(10):
            rec = run_episode(ENV, params, rng)
            if len(rec) >= 400:
                return params.theta
            params = update_paper_faithful(params, rec, 0.02)
    raise AssertionError("no good parameters found")


def test_warm_start_beats_fresh_start():
    good = _good_theta()
    warm, fresh = [], []
    for seed in range(1000, 1010):
        _, lw = train_mc(ENV, McConfig(), good, Rng(seed))
        rng = Rng(seed)
        _, lf = train_mc(ENV, McConfig(), initial_theta(rng), rng)
        warm.append(np.mean(lw))
        fresh.append(np.mean(lf))
    assert np.mean(warm) > np.mean(fresh)
