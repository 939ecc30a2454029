"""Gradient-check suite: analytic gradients against finite-difference oracles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actor_critic import (
    AcEpisodeTape,
    _views,
    ac_init,
    discounted_returns,
    loss_and_grad,
    normalize_returns,
    rollout,
)
from .cartpole import EnvConfig
from .linear_policy import (
    SoftmaxPolicyParams,
    likelihood_ratio_residual,
    one_hot_features,
    random_mdp,
    softmax_policy,
    softmax_score,
    tabular_pg_theorem_check,
)
from .numerics import Rng, central_diff_grad, max_relative_error

AC_REL_TOL = 1e-4
SCORE_TOL = 1e-6
LR_TOL = 1e-6
PG_THEOREM_TOL = 1e-5


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.value < self.threshold

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: max error {self.value:.3e} (< {self.threshold:.0e})"


def reference_episode_loss(params, obs, actions, returns, base_values, value_grad_in_actor_loss,
                           relu_mask, huber_branch) -> float:
    """Episode loss recomputed from scratch with ReLU and Huber branches frozen.

    Freezing the branches at the base point restricts the loss to the smooth
    piece the analytic gradient differentiates, so central differences do not
    straddle kinks.
    """
    v = _views(np.asarray(params, dtype=float))
    h = (obs @ v["W1"].T + v["b1"]) * relu_mask
    z = h @ v["Wa"].T + v["ba"]
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    lp = logp[np.arange(len(actions)), actions]
    values = h @ v["Wc"][0] + v["bc"][0]
    baseline = values if value_grad_in_actor_loss else base_values
    r = returns - values
    hub = np.where(huber_branch == 0, 0.5 * r * r, np.where(huber_branch > 0, r - 0.5, -r - 0.5))
    return float(np.sum(-lp * (returns - baseline)) + np.sum(hub))


def frozen_episode(rng: Rng, max_len: int = 12):
    """A random network with nonzero biases and a short sampled episode."""
    net = ac_init(rng)
    for b in (net.b1, net.ba, net.bc):
        for i in range(b.size):
            b[i] = rng.uniform(-0.1, 0.1)
    steps = 3 + rng.randbelow(max_len - 2)
    tape = rollout(net, EnvConfig(), rng, steps + 1)
    returns = np.array(normalize_returns(discounted_returns(tape.rewards, 0.99)))
    return net, tape, returns


def ac_gradient_error(net, tape: AcEpisodeTape, returns, value_grad_in_actor_loss=True,
                      eps: float = 1e-4) -> float:
    _, grad = loss_and_grad(net, tape, returns, value_grad_in_actor_loss)
    obs = np.asarray(tape.obs)
    actions = np.asarray(tape.actions)
    base_values = np.asarray(tape.values)
    mask = (obs @ net.W1.T + net.b1 > 0).astype(float)
    resid = returns - base_values
    branch = np.where(np.abs(resid) <= 1.0, 0.0, np.sign(resid))
    fd = central_diff_grad(
        lambda p: reference_episode_loss(p, obs, actions, returns, base_values,
                                         value_grad_in_actor_loss, mask, branch),
        net.params, eps)
    return max_relative_error(grad, fd)


def random_softmax_instance(rng: Rng, n_states=3, n_actions=3, dim=4) -> SoftmaxPolicyParams:
    feats = np.array([[[rng.uniform(-1, 1) for _ in range(dim)] for _ in range(n_actions)]
                      for _ in range(n_states)])
    theta = np.array([rng.uniform(-2, 2) for _ in range(dim)])
    return SoftmaxPolicyParams(theta, feats)


def run_suite(seed: int = 0, n_episodes: int = 10, n_mdps: int = 20) -> list[CheckResult]:
    rng = Rng(seed)

    worst_ac = 0.0
    for _ in range(n_episodes):
        net, tape, returns = frozen_episode(rng)
        for flag in (True, False):
            worst_ac = max(worst_ac, ac_gradient_error(net, tape, returns, flag))

    worst_score = worst_lr = 0.0
    for _ in range(20):
        params = random_softmax_instance(rng)
        for s in range(3):
            for a in range(3):
                fd = central_diff_grad(lambda th: np.log(softmax_policy(params.with_theta(th), s)[a]),
                                       params.theta, 1e-5)
                worst_score = max(worst_score, float(np.max(np.abs(fd - softmax_score(params, s, a)))))
                worst_lr = max(worst_lr, likelihood_ratio_residual(params, s, a))

    worst_pg = 0.0
    for i in range(n_mdps):
        S = 2 + i % 5
        A = 2 + i % 3
        mdp = random_mdp(rng, S, A)
        theta = np.array([rng.uniform(-1, 1) for _ in range(S * A)])
        params = SoftmaxPolicyParams(theta, one_hot_features(S, A))
        worst_pg = max(worst_pg, tabular_pg_theorem_check(mdp, params, 0.9))

    return [
        CheckResult("actor-critic episode-loss gradient (relative)", worst_ac, AC_REL_TOL),
        CheckResult("softmax score vs d log pi", worst_score, SCORE_TOL),
        CheckResult("likelihood-ratio residual", worst_lr, LR_TOL),
        CheckResult("policy gradient theorem (tabular)", worst_pg, PG_THEOREM_TOL),
    ]
