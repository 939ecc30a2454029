"""Shared-trunk actor-critic trained per episode with hand-derived gradients.

Network: obs(4) -> Dense(128, relu) -> {softmax over 2 actions, scalar value}.
Loss per episode, with normalized discounted returns ``ret_t`` held constant::

    L = sum_t -log pi(a_t | s_t) * (ret_t - v_t)  +  sum_t huber(v_t, ret_t)

With ``value_grad_in_actor_loss`` the value estimate inside the actor term is
differentiated as well, as an autodiff framework would do with a live tensor;
otherwise it is treated as a constant baseline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import cartpole, kernels
from .cartpole import EnvConfig
from .numerics import FLOAT32_EPS, AdamState, Rng, adam_step, huber, huber_grad

NUM_INPUTS = 4
NUM_HIDDEN = 128
NUM_ACTIONS = 2

_SHAPES = (
    ("W1", (NUM_HIDDEN, NUM_INPUTS)),
    ("b1", (NUM_HIDDEN,)),
    ("Wa", (NUM_ACTIONS, NUM_HIDDEN)),
    ("ba", (NUM_ACTIONS,)),
    ("Wc", (1, NUM_HIDDEN)),
    ("bc", (1,)),
)
N_PARAMS = sum(math.prod(shape) for _, shape in _SHAPES)


def _views(flat: np.ndarray) -> dict[str, np.ndarray]:
    out, i = {}, 0
    for name, shape in _SHAPES:
        n = math.prod(shape)
        out[name] = flat[i:i + n].reshape(shape)
        i += n
    return out


class AcNetwork:
    """Parameters live in one flat vector; ``W1`` etc. are views into it."""

    def __init__(self, params: np.ndarray, adam: Optional[AdamState] = None, lr: float = 0.01):
        params = np.ascontiguousarray(params, dtype=float)
        if params.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} parameters, got {params.shape}")
        self.params = params
        self.adam = adam if adam is not None else AdamState.zeros(N_PARAMS, lr=lr)
        v = _views(params)
        self.W1, self.b1, self.Wa, self.ba, self.Wc, self.bc = (
            v["W1"], v["b1"], v["Wa"], v["ba"], v["Wc"], v["bc"])

    def copy(self) -> "AcNetwork":
        a = self.adam
        return AcNetwork(self.params.copy(), AdamState(a.m.copy(), a.v.copy(), a.t, a.lr, a.beta1, a.beta2, a.eps_hat))

    def views(self) -> dict[str, np.ndarray]:
        return _views(self.params)

    def save(self, path) -> None:
        np.savez(path, params=self.params, m=self.adam.m, v=self.adam.v, t=self.adam.t)

    @classmethod
    def load(cls, path, lr: float = 0.01) -> "AcNetwork":
        with np.load(path) as z:
            adam = AdamState(z["m"], z["v"], int(z["t"]), lr=lr)
            return cls(z["params"], adam)


def ac_init(rng: Rng, lr: float = 0.01) -> AcNetwork:
    """Glorot-uniform weights per layer, zero biases, zeroed Adam moments."""
    flat = np.zeros(N_PARAMS)
    net = AcNetwork(flat, lr=lr)
    for W in (net.W1, net.Wa, net.Wc):
        fan_out, fan_in = W.shape
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        for idx in np.ndindex(W.shape):
            W[idx] = rng.uniform(-limit, limit)
    return net


@dataclass
class Activations:
    hidden: np.ndarray
    probs: np.ndarray
    log_probs: np.ndarray
    value: float


def ac_forward(net: AcNetwork, obs) -> tuple[np.ndarray, float, Activations]:
    obs = np.ascontiguousarray(obs, dtype=float)
    h = np.empty(NUM_HIDDEN)
    probs = np.empty(NUM_ACTIONS)
    logp = np.empty(NUM_ACTIONS)
    value = kernels.ac_forward(net.W1, net.b1, net.Wa, net.ba, net.Wc, net.bc, obs, h, probs, logp)
    return probs, value, Activations(h, probs, logp, value)


def greedy_action(probs) -> int:
    """Argmax with ties broken toward action 0."""
    return int(np.argmax(probs))


# --- returns ---------------------------------------------------------------


def discounted_returns(rewards, gamma: float) -> list[float]:
    if len(rewards) == 0:
        raise ValueError("discounted_returns of an empty episode")
    returns = []
    discounted_sum = 0.0
    for r in reversed(rewards):
        discounted_sum = r + gamma * discounted_sum
        returns.append(discounted_sum)
    returns.reverse()
    return returns


def normalize_returns(returns, eps: float = FLOAT32_EPS) -> list[float]:
    arr = np.asarray(returns, dtype=float)
    return ((arr - arr.mean()) / (arr.std() + eps)).tolist()


def update_running_reward(running: float, episode_reward: float, alpha: float = 0.05) -> float:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return alpha * episode_reward + (1 - alpha) * running


# --- training ----------------------------------------------------------------


@dataclass(frozen=True)
class AcTrainConfig:
    gamma: float = 0.99
    lr: float = 0.01
    max_steps_per_episode: int = 10000
    solve_threshold: float = 195.0
    running_alpha: float = 0.05
    value_grad_in_actor_loss: bool = True
    episode_cap: int = 5000

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not 0 < self.running_alpha < 1:
            raise ValueError("running_alpha must lie in (0, 1)")


@dataclass
class AcEpisodeTape:
    obs: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    hidden: list = field(default_factory=list)
    probs: list = field(default_factory=list)

    def __len__(self):
        return len(self.rewards)

    def record(self, obs, action, act: Activations, reward):
        self.obs.append(obs)
        self.actions.append(action)
        self.log_probs.append(float(act.log_probs[action]))
        self.values.append(act.value)
        self.rewards.append(reward)
        self.hidden.append(act.hidden)
        self.probs.append(act.probs)

    def clear(self):
        for lst in (self.obs, self.actions, self.log_probs, self.values,
                    self.rewards, self.hidden, self.probs):
            lst.clear()


def rollout(net: AcNetwork, env_config: EnvConfig, rng: Rng, max_steps: int = 10000) -> AcEpisodeTape:
    """Sample one episode from the current policy, caching activations for backprop."""
    tape = AcEpisodeTape()
    state = cartpole.reset(env_config, rng)
    # at most max_steps - 1 environment steps, as in range(1, max_steps)
    for _ in range(1, max_steps):
        obs = state.obs
        probs, _, act = ac_forward(net, obs)
        action = rng.choice(probs)
        state, reward, done = cartpole.step(state, action, env_config)
        tape.record(obs, action, act, reward)
        if done:
            break
    return tape


def episode_loss(tape: AcEpisodeTape, returns) -> float:
    loss = 0.0
    for log_prob, value, ret in zip(tape.log_probs, tape.values, returns):
        loss += -log_prob * (ret - value)
    for value, ret in zip(tape.values, returns):
        loss += huber(value, ret)
    return loss


def loss_and_grad(net: AcNetwork, tape: AcEpisodeTape, returns,
                  value_grad_in_actor_loss: bool = True) -> tuple[float, np.ndarray]:
    """Episode loss and its exact gradient over the flat parameter vector."""
    T = len(tape)
    returns = np.asarray(returns, dtype=float)
    values = np.asarray(tape.values)
    log_probs = np.asarray(tape.log_probs)
    probs = np.asarray(tape.probs)
    diff = returns - values

    onehot = np.zeros((T, NUM_ACTIONS))
    onehot[np.arange(T), tape.actions] = 1.0
    # d(-log pi_a)/dz = probs - onehot, scaled by the advantage
    dlogits = np.ascontiguousarray((probs - onehot) * diff[:, None])
    dvalue = np.array([huber_grad(v, r) for v, r in zip(values, returns)])
    if value_grad_in_actor_loss:
        dvalue += log_probs

    grad = np.zeros(N_PARAMS)
    g = _views(grad)
    kernels.ac_backward(net.Wa, net.Wc, np.ascontiguousarray(tape.obs), np.ascontiguousarray(tape.hidden),
                        dlogits, dvalue, g["W1"], g["b1"], g["Wa"], g["ba"], g["Wc"], g["bc"])
    return episode_loss(tape, returns), grad


def apply_gradient(net: AcNetwork, grad: np.ndarray) -> AcNetwork:
    params, adam = adam_step(net.params, grad, net.adam)
    return AcNetwork(params, adam)


def ac_episode_update(net: AcNetwork, env_config: EnvConfig, train_config: AcTrainConfig,
                      rng: Rng) -> tuple[AcNetwork, float, int]:
    tape = rollout(net, env_config, rng, train_config.max_steps_per_episode)
    episode_reward = float(sum(tape.rewards))
    steps = len(tape)
    returns = normalize_returns(discounted_returns(tape.rewards, train_config.gamma))
    _, grad = loss_and_grad(net, tape, returns, train_config.value_grad_in_actor_loss)
    tape.clear()
    return apply_gradient(net, grad), episode_reward, steps


def train_ac(env_config: EnvConfig, train_config: AcTrainConfig, rng: Rng,
             until: Optional[Callable[[list[tuple[float, float]]], bool]] = None,
             progress: Optional[Callable[[str], None]] = None,
             net: Optional[AcNetwork] = None):
    """Train until solved or ``episode_cap`` episodes.

    Solved means running reward > ``solve_threshold``, unless ``until(history)``
    is given, which replaces that test. Returns ``(net, history, solved_at)``
    where history rows are ``(episode_reward, running_reward)`` and
    ``solved_at`` is a 1-based episode index or None.
    """
    if net is None:
        net = ac_init(rng, train_config.lr)
    running = 0.0
    history: list[tuple[float, float]] = []
    for episode in range(1, train_config.episode_cap + 1):
        net, episode_reward, _ = ac_episode_update(net, env_config, train_config, rng)
        running = update_running_reward(running, episode_reward, train_config.running_alpha)
        history.append((episode_reward, running))
        if progress is not None and episode % 10 == 0:
            progress("running reward: {:.2f} at episode {}".format(running, episode))
        solved = until(history) if until is not None else running > train_config.solve_threshold
        if solved:
            if progress is not None:
                progress("Solved at episode {}!".format(episode))
            return net, history, episode
    return net, history, None


def greedy_evaluate(net: AcNetwork, env_config: EnvConfig, rng: Rng, episodes: int = 20) -> list[float]:
    """Episode rewards of the argmax policy."""
    rewards = []
    for _ in range(episodes):
        state = cartpole.reset(env_config, rng)
        total, done = 0.0, False
        while not done:
            probs, _, _ = ac_forward(net, state.obs)
            state, r, done = cartpole.step(state, greedy_action(probs), env_config)
            total += r
        rewards.append(total)
    return rewards
