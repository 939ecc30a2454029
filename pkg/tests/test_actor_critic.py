import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polegrad.actor_critic import (
    N_PARAMS,
    AcNetwork,
    AcTrainConfig,
    ac_forward,
    ac_init,
    discounted_returns,
    greedy_action,
    greedy_evaluate,
    loss_and_grad,
    normalize_returns,
    rollout,
    train_ac,
    update_running_reward,
)
from polegrad.cartpole import EnvConfig
from polegrad.gradcheck import AC_REL_TOL, ac_gradient_error, frozen_episode
from polegrad.numerics import FLOAT32_EPS, Rng

ENV = EnvConfig()


def test_parameter_count():
    assert N_PARAMS == 4 * 128 + 128 + 2 * 128 + 2 + 128 + 1
    with pytest.raises(ValueError):
        AcNetwork(np.zeros(10))


def test_init_limits_and_zero_biases():
    net = ac_init(Rng(0))
    assert np.all(net.b1 == 0) and np.all(net.ba == 0) and np.all(net.bc == 0)
    assert np.max(np.abs(net.W1)) <= math.sqrt(6 / 132)
    assert np.max(np.abs(net.Wa)) <= math.sqrt(6 / 130)
    assert np.max(np.abs(net.Wc)) <= math.sqrt(6 / 129)
    assert np.array_equal(net.params, ac_init(Rng(0)).params)
    assert not np.array_equal(net.params, ac_init(Rng(1)).params)


def test_views_alias_flat_vector():
    net = ac_init(Rng(0))
    net.W1[0, 0] = 123.0
    assert net.params[0] == 123.0


def test_zero_network_forward():
    probs, value, act = ac_forward(AcNetwork(np.zeros(N_PARAMS)), [0.1, -0.2, 0.3, 0.4])
    assert np.array_equal(probs, [0.5, 0.5]) and value == 0.0
    assert np.allclose(act.log_probs, math.log(0.5))
    assert greedy_action(probs) == 0


@given(st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_forward_matches_numpy(seed):
    rng = Rng(seed)
    net = ac_init(rng)
    net.b1[:] = [rng.uniform(-0.5, 0.5) for _ in range(128)]
    obs = np.array([rng.uniform(-2, 2) for _ in range(4)])
    probs, value, act = ac_forward(net, obs)
    h = np.maximum(net.W1 @ obs + net.b1, 0)
    z = net.Wa @ h + net.ba
    p = np.exp(z - z.max()) / np.exp(z - z.max()).sum()
    assert np.allclose(act.hidden, h, rtol=1e-13, atol=1e-15)
    assert np.allclose(probs, p, rtol=1e-12)
    assert abs(probs.sum() - 1) < 1e-12
    assert value == pytest.approx(float(net.Wc[0] @ h + net.bc[0]), rel=1e-12, abs=1e-14)


def test_value_linear_in_critic_weights():
    net = ac_init(Rng(3))
    obs = [0.01, 0.2, -0.03, 0.1]
    _, v1, _ = ac_forward(net, obs)
    net.Wc[...] *= 2.0
    _, v2, _ = ac_forward(net, obs)
    assert v2 == pytest.approx(2 * v1, rel=1e-12)


def test_extreme_logits_stay_finite():
    net = AcNetwork(np.zeros(N_PARAMS))
    net.ba[:] = [1000.0, -1000.0]
    probs, _, act = ac_forward(net, [0, 0, 0, 0])
    assert np.all(np.isfinite(act.log_probs))
    assert probs[0] == 1.0 and act.log_probs[1] == pytest.approx(-2000.0)


def test_discounted_returns():
    assert np.allclose(discounted_returns([1, 1, 1], 0.99), [2.9701, 1.99, 1.0], rtol=0, atol=1e-12)
    assert discounted_returns([3, 4, 5], 0.0) == [3, 4, 5]
    assert discounted_returns([1] * 6, 1.0) == [6, 5, 4, 3, 2, 1]
    with pytest.raises(ValueError):
        discounted_returns([], 0.99)


def test_normalize_examples():
    assert normalize_returns([2.0, 2.0, 2.0]) == [0.0, 0.0, 0.0]
    lo, hi = normalize_returns([1.0, 3.0])
    assert lo == pytest.approx(-(1 - FLOAT32_EPS), rel=1e-9) and hi == -lo


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=200))
@settings(max_examples=100)
def test_normalize_properties(xs):
    arr = np.asarray(xs)
    if arr.std() < 1e-3:
        return
    out = np.asarray(normalize_returns(xs))
    assert abs(out.mean()) < 1e-9
    assert abs(out.std() - 1) < 1e-6


def test_running_reward():
    assert update_running_reward(0.0, 100.0) == pytest.approx(5.0)
    assert update_running_reward(42.0, 42.0) == pytest.approx(42.0)
    r = 0.0
    for k in range(1, 50):
        r = update_running_reward(r, 10.0)
        assert 10 - r == pytest.approx(10 * 0.95 ** k)
    with pytest.raises(ValueError):
        update_running_reward(0.0, 1.0, alpha=1.0)


def test_rollout_caps_steps():
    net = ac_init(Rng(0))
    tape = rollout(net, ENV, Rng(0), max_steps=5)
    assert 1 <= len(tape) <= 4


@pytest.mark.parametrize("flag", [True, False])
def test_gradients_on_frozen_episodes(flag):
    rng = Rng(2024)
    for _ in range(4):
        net, tape, returns = frozen_episode(rng)
        assert ac_gradient_error(net, tape, returns, flag) < AC_REL_TOL


def test_three_step_episode_gradient():
    rng = Rng(8)
    net = ac_init(rng)
    tape = rollout(net, ENV, rng, max_steps=4)
    assert len(tape) == 3
    returns = np.array(normalize_returns(discounted_returns(tape.rewards, 0.99)))
    assert ac_gradient_error(net, tape, returns, True) < AC_REL_TOL


def test_perfect_critic_has_no_gradient():
    rng = Rng(5)
    net = ac_init(rng)
    tape = rollout(net, ENV, rng, max_steps=8)
    returns = np.array(tape.values)
    _, grad = loss_and_grad(net, tape, returns, value_grad_in_actor_loss=False)
    assert np.all(grad == 0)


def test_train_threshold_trivial():
    _, history, solved = train_ac(ENV, AcTrainConfig(solve_threshold=-1.0), Rng(0))
    assert solved == 1 and len(history) == 1


def test_train_deterministic_and_capped():
    cfg = AcTrainConfig(episode_cap=5)
    a = train_ac(ENV, cfg, Rng(1))
    b = train_ac(ENV, cfg, Rng(1))
    assert a[2] is None and len(a[1]) == 5
    assert a[1] == b[1] and np.array_equal(a[0].params, b[0].params)
    assert a[0].adam.t == 5


def test_progress_messages():
    lines = []
    train_ac(ENV, AcTrainConfig(episode_cap=20), Rng(1), progress=lines.append)
    assert len(lines) == 2 and lines[0].startswith("running reward:")


def test_save_load_roundtrip(tmp_path):
    net, _, _ = train_ac(ENV, AcTrainConfig(episode_cap=2), Rng(4))
    path = tmp_path / "actor.npz"
    net.save(path)
    back = AcNetwork.load(path)
    assert np.array_equal(back.params, net.params) and back.adam.t == net.adam.t
    assert np.array_equal(back.adam.m, net.adam.m)


def test_greedy_evaluate_counts():
    rewards = greedy_evaluate(AcNetwork(np.zeros(N_PARAMS)), ENV, Rng(0), episodes=3)
    assert len(rewards) == 3 and all(1 <= r <= 500 for r in rewards)


def test_config_validation():
    with pytest.raises(ValueError):
        AcTrainConfig(gamma=1.0)
    with pytest.raises(ValueError):
        AcTrainConfig(lr=0.0)
