"""Monte-Carlo policy gradient over the linear-sigmoid policy.

Two update rules are provided:

``paper_faithful``
    The reference update kept exactly: threshold actions, and after each
    episode ``theta += lr * (1 - pi) * (-obs) * reward`` per step, applied in
    order, where ``obs`` is the observation *after* the step and ``pi`` was
    computed from the observation *before* it.

``reinforce``
    Textbook REINFORCE: actions sampled from Bernoulli(pi), one batched update
    ``theta += lr * sum_t G_t * grad log pi(a_t | s_t)`` using pre-step
    observations and discounted return-to-go ``G_t``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import cartpole
from .cartpole import EnvConfig
from .linear_policy import LinearPolicyParams, sigmoid_prob, threshold_action
from .numerics import Rng

PAPER_FAITHFUL = "paper_faithful"
REINFORCE = "reinforce"


@dataclass(frozen=True)
class McConfig:
    lr: float = 0.02
    episodes: int = 10
    mode: str = PAPER_FAITHFUL
    gamma: float = 1.0

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if self.mode not in (PAPER_FAITHFUL, REINFORCE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == REINFORCE and not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")


@dataclass
class McEpisodeRecord:
    obs: np.ndarray       # (T, 4) observation the action was chosen from
    next_obs: np.ndarray  # (T, 4) observation returned by the step
    actions: np.ndarray   # (T,)
    pis: np.ndarray       # (T,) sigmoid probability of action 1
    rewards: np.ndarray   # (T,)

    def __len__(self):
        return len(self.actions)

    def concat(self, other: "McEpisodeRecord") -> "McEpisodeRecord":
        return McEpisodeRecord(*(np.concatenate([a, b]) for a, b in zip(
            (self.obs, self.next_obs, self.actions, self.pis, self.rewards),
            (other.obs, other.next_obs, other.actions, other.pis, other.rewards))))


def run_episode(env_config: EnvConfig, params: LinearPolicyParams, rng: Rng,
                sample: bool = False) -> McEpisodeRecord:
    """Roll out one episode. ``sample=False`` uses the deterministic threshold policy."""
    state = cartpole.reset(env_config, rng)
    obs, next_obs, actions, pis, rewards = [], [], [], [], []
    done = False
    while not done:
        o = state.obs
        pi = sigmoid_prob(params, o)
        if sample:
            action = rng.choice((1.0 - pi, pi))
        else:
            action = threshold_action(pi)
        state, reward, done = cartpole.step(state, action, env_config)
        obs.append(o)
        next_obs.append(state.obs)
        actions.append(action)
        pis.append(pi)
        rewards.append(reward)
    return McEpisodeRecord(np.array(obs), np.array(next_obs), np.array(actions),
                           np.array(pis), np.array(rewards))


def update_paper_faithful(params: LinearPolicyParams, record: McEpisodeRecord, lr: float) -> LinearPolicyParams:
    theta = params.theta.copy()
    for o, pi, r in zip(record.next_obs, record.pis, record.rewards):
        theta += lr * (1 - pi) * np.transpose(-o) * r
    return LinearPolicyParams(theta)


def returns_to_go(rewards, gamma: float) -> np.ndarray:
    out = np.empty(len(rewards))
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def sigmoid_log_prob_grad(obs, action: int, pi: float) -> np.ndarray:
    """Gradient of log pi(action | obs) for the linear-sigmoid policy."""
    obs = np.asarray(obs, dtype=float)
    return (1.0 - pi) * obs if action == 1 else -pi * obs


def update_reinforce(params: LinearPolicyParams, record: McEpisodeRecord, lr: float,
                     gamma: float = 1.0) -> LinearPolicyParams:
    G = returns_to_go(record.rewards, gamma)
    coef = np.where(record.actions == 1, 1.0 - record.pis, -record.pis) * G
    return LinearPolicyParams(params.theta + lr * (coef @ record.obs))


def initial_theta(rng: Rng) -> np.ndarray:
    return np.array([rng.random() for _ in range(4)])


def train_mc(env_config: EnvConfig, mc_config: McConfig, theta0, rng: Rng,
             until: Optional[Callable[[list[int]], bool]] = None) -> tuple[np.ndarray, list[int]]:
    """Train for ``mc_config.episodes`` episodes, or stop early once ``until(lengths)`` holds."""
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (4,):
        raise ValueError("theta0 must have 4 entries")
    params = LinearPolicyParams(theta0.copy())
    sample = mc_config.mode == REINFORCE
    lengths: list[int] = []
    for _ in range(mc_config.episodes):
        record = run_episode(env_config, params, rng, sample=sample)
        lengths.append(len(record))
        if sample:
            params = update_reinforce(params, record, mc_config.lr, mc_config.gamma)
        else:
            params = update_paper_faithful(params, record, mc_config.lr)
        if until is not None and until(lengths):
            break
    return params.theta, lengths
