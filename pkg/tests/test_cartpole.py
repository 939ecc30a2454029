import math

import numpy as np
import pytest

from polegrad import kernels
from polegrad.cartpole import (
    CartState,
    EnvConfig,
    TerminalStateError,
    is_terminal,
    random_rollout,
    reset,
    step,
)
from polegrad.numerics import Rng

CFG = EnvConfig()


def test_default_constants():
    assert CFG.theta_limit == pytest.approx(math.radians(15))
    assert CFG.x_limit == 2.4
    assert CFG.max_steps == 500


def test_config_rejects_nonpositive():
    with pytest.raises(ValueError):
        EnvConfig(gravity=0)
    with pytest.raises(ValueError):
        EnvConfig(max_steps=0)


def test_reset_bounds_and_determinism():
    rng = Rng(0)
    for _ in range(200):
        s = reset(CFG, rng)
        assert np.all(np.abs(s.obs) <= 0.05)
        assert s.t == 0 and not s.done
    assert reset(CFG, Rng(8)) == reset(CFG, Rng(8))


def test_reset_means():
    rng = Rng(1)
    obs = np.array([reset(CFG, rng).obs for _ in range(10_000)])
    assert np.all(np.abs(obs.mean(axis=0)) <= 0.005)


def test_observation_order():
    s = CartState(1.0, 2.0, 3.0, 4.0)
    assert list(s.obs) == [1.0, 2.0, 3.0, 4.0]


def test_push_right_from_rest():
    s, r, done = step(CartState(0.0, 0.0, 0.0, 0.0), 1, CFG)
    # accelerations at theta = 0: xacc = 4400/451, thetaacc = -600/41
    assert s.x_dot == pytest.approx(0.02 * 4400 / 451, rel=1e-14)
    assert s.theta_dot == pytest.approx(-0.02 * 600 / 41, rel=1e-14)
    assert s.x == 0.0 and s.theta == 0.0
    assert r == 1.0 and not done and s.t == 1


def test_push_left_mirrors_push_right():
    right, _, _ = step(CartState(0.0, 0.0, 0.0, 0.0), 1, CFG)
    left, _, _ = step(CartState(0.0, 0.0, 0.0, 0.0), 0, CFG)
    assert left.x_dot == -right.x_dot and left.theta_dot == -right.theta_dot


def test_angle_limit_terminates():
    # 0.28 rad > 15 degrees
    s, r, done = step(CartState(0.0, 0.0, 0.28, 0.0), 1, CFG)
    assert done and s.done and r == 1.0


def test_just_inside_angle_limit_continues():
    s, _, done = step(CartState(0.0, 0.0, 0.2, 0.0), 0, CFG)
    assert abs(s.theta) <= CFG.theta_limit and not done


def test_cart_limit_terminates():
    s, _, done = step(CartState(2.4, 1.0, 0.0, 0.0), 1, CFG)
    assert s.x > 2.4 and done


def test_step_cap():
    s, _, done = step(CartState(0.0, 0.0, 0.0, 0.0, t=499), 1, CFG)
    assert s.t == 500 and done


def test_stepping_terminal_state_raises():
    s, _, done = step(CartState(0.0, 0.0, 0.28, 0.0), 1, CFG)
    assert done
    with pytest.raises(TerminalStateError):
        step(s, 0, CFG)


def test_invalid_action():
    with pytest.raises(ValueError):
        step(CartState(0, 0, 0, 0), 2, CFG)


def test_termination_is_stable():
    s, _, _ = step(CartState(0.0, 0.0, 0.28, 0.0), 1, CFG)
    assert is_terminal(s, CFG) and is_terminal(s, CFG)


def test_inverted_pendulum_unstable_without_force():
    x, xd, th, thd = 0.0, 0.0, 1e-3, 0.0
    prev = abs(th)
    for _ in range(10):
        x, xd, th, thd = kernels.cartpole_step(x, xd, th, thd, 0.0, 9.8, 1.0, 0.1, 0.5, 0.02)
        assert abs(th) >= prev
        prev = abs(th)


def test_reward_equals_length_and_cap():
    rng = Rng(3)
    cfg = EnvConfig(max_steps=30)
    for _ in range(50):
        state = reset(cfg, rng)
        total, done = 0.0, False
        while not done:
            state, r, done = step(state, 1 if state.theta + 0.5 * state.theta_dot > 0 else 0, cfg)
            total += r
        assert total == state.t <= 30


def test_random_rollouts():
    rng = Rng(0)
    lengths = [random_rollout(CFG, rng) for _ in range(200)]
    assert min(lengths) >= 1
    assert np.mean(lengths) < 60
    assert [random_rollout(CFG, Rng(5)) for _ in range(3)] == [random_rollout(CFG, Rng(5)) for _ in range(3)]
