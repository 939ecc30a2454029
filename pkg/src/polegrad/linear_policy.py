"""Linear policies, their score functions, and an exact tabular check of the
policy gradient theorem.

Three policy families live here:

* the linear-sigmoid binary policy used by the Monte-Carlo trainer,
* a linear-softmax policy over features ``phi(s, a)`` with analytic score
  ``phi(s, a) - E_pi[phi(s, .)]``,
* a unit-variance Gaussian policy with linear mean. Its score
  ``(a - phi(s).theta) * phi(s)`` follows from differentiating
  ``log N(a; phi(s).theta, 1)``; this is a chosen convention, not a sourced
  formula.

On a small tabular MDP every quantity in the policy gradient theorem can be
computed exactly (policy evaluation is a linear solve), so the theorem is
checked against a finite-difference gradient of the exact objective.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .numerics import Rng, central_diff_grad


class InvalidProbabilityError(ValueError):
    pass


class UnsupportedMDPError(ValueError):
    pass


@dataclass
class LinearPolicyParams:
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def sigmoid_prob(params: LinearPolicyParams, obs) -> float:
    return sigmoid(float(np.dot(params.theta, obs)))


def threshold_action(pi: float) -> int:
    """Push right (1) when ``pi >= 0.5``, else push left (0)."""
    if not 0.0 <= pi <= 1.0:
        raise InvalidProbabilityError(f"probability out of range: {pi}")
    return 1 if pi >= 0.5 else 0


FeatureSource = Union[np.ndarray, Callable[[int], np.ndarray]]


@dataclass
class SoftmaxPolicyParams:
    """``features`` is either an (n_states, n_actions, dim) table or a callable
    mapping a state to its (n_actions, dim) feature matrix."""

    theta: np.ndarray
    features: FeatureSource

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)

    def phi(self, s) -> np.ndarray:
        if callable(self.features):
            return np.asarray(self.features(s), dtype=float)
        return self.features[s]

    def with_theta(self, theta) -> "SoftmaxPolicyParams":
        return SoftmaxPolicyParams(np.asarray(theta, dtype=float), self.features)


def softmax(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        raise ValueError("softmax over an empty action set")
    z = np.exp(scores - scores.max())
    return z / z.sum()


def softmax_policy(params: SoftmaxPolicyParams, s) -> np.ndarray:
    return softmax(params.phi(s) @ params.theta)


def softmax_score(params: SoftmaxPolicyParams, s, a: int) -> np.ndarray:
    phi = params.phi(s)
    probs = softmax(phi @ params.theta)
    return phi[a] - probs @ phi


def gaussian_score(mean_params, features, a: float) -> np.ndarray:
    """Score of a unit-variance Gaussian policy with mean ``features . mean_params``."""
    features = np.asarray(features, dtype=float)
    mu = float(features @ np.asarray(mean_params, dtype=float))
    return (a - mu) * features


def gaussian_log_density(mean_params, features, a: float) -> float:
    mu = float(np.asarray(features, dtype=float) @ np.asarray(mean_params, dtype=float))
    return -0.5 * (a - mu) ** 2 - 0.5 * math.log(2 * math.pi)


def likelihood_ratio_residual(params: SoftmaxPolicyParams, s, a: int, eps: float = 1e-5) -> float:
    """Max-norm of grad(pi) - pi * grad(log pi), with grad(pi) by central differences."""
    numeric = central_diff_grad(lambda th: softmax_policy(params.with_theta(th), s)[a], params.theta, eps)
    analytic = softmax_policy(params, s)[a] * softmax_score(params, s, a)
    return float(np.max(np.abs(numeric - analytic))) if numeric.size else 0.0


# --- tabular MDPs -----------------------------------------------------------


@dataclass
class TabularMDP:
    """``P[s, a, s']`` transition probabilities, ``R[s, a]`` expected rewards,
    ``start[s]`` initial-state distribution."""

    P: np.ndarray
    R: np.ndarray
    start: np.ndarray

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.start = np.asarray(self.start, dtype=float)
        S, A, S2 = self.P.shape
        if S != S2 or self.R.shape != (S, A) or self.start.shape != (S,):
            raise ValueError("inconsistent MDP shapes")
        if not np.allclose(self.P.sum(axis=2), 1.0):
            raise ValueError("transition rows must sum to 1")

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]


def one_hot_features(n_states: int, n_actions: int) -> np.ndarray:
    """phi(s, a) = e_{s*A + a}."""
    return np.eye(n_states * n_actions).reshape(n_states, n_actions, n_states * n_actions)


def random_mdp(rng: Rng, n_states: int, n_actions: int) -> TabularMDP:
    P = np.array([[[rng.uniform(0.05, 1.0) for _ in range(n_states)]
                   for _ in range(n_actions)] for _ in range(n_states)])
    P /= P.sum(axis=2, keepdims=True)
    R = np.array([[rng.uniform(-1.0, 1.0) for _ in range(n_actions)] for _ in range(n_states)])
    start = np.array([rng.uniform(0.05, 1.0) for _ in range(n_states)])
    return TabularMDP(P, R, start / start.sum())


def policy_matrix(mdp: TabularMDP, params: SoftmaxPolicyParams) -> np.ndarray:
    return np.array([softmax_policy(params, s) for s in range(mdp.n_states)])


def _induced_chain(mdp: TabularMDP, pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    P_pi = np.einsum("sa,sat->st", pi, mdp.P)
    r_pi = np.einsum("sa,sa->s", pi, mdp.R)
    return P_pi, r_pi


def evaluate_policy(mdp: TabularMDP, params: SoftmaxPolicyParams, gamma: float):
    """Exact discounted (V, Q) by a linear solve."""
    pi = policy_matrix(mdp, params)
    P_pi, r_pi = _induced_chain(mdp, pi)
    V = np.linalg.solve(np.eye(mdp.n_states) - gamma * P_pi, r_pi)
    Q = mdp.R + gamma * mdp.P @ V
    return V, Q


def stationary_distribution(P_pi: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Stationary distribution of an irreducible chain by power iteration.

    Iterates the lazy chain (I + P) / 2, which shares the stationary
    distribution and is aperiodic, so periodic chains converge too.
    """
    n = P_pi.shape[0]
    step = (P_pi > 0) | np.eye(n, dtype=bool)
    reach = step.copy()
    for _ in range(n):
        reach = (reach.astype(int) @ step.astype(int)) > 0
    if not reach.all():
        raise UnsupportedMDPError("policy-induced chain is not irreducible")
    lazy = 0.5 * (np.eye(n) + P_pi)
    d = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = d @ lazy
        if np.max(np.abs(nxt - d)) < tol:
            return nxt / nxt.sum()
        d = nxt
    raise UnsupportedMDPError("power iteration did not converge")


def start_value(mdp: TabularMDP, params: SoftmaxPolicyParams, gamma: float) -> float:
    V, _ = evaluate_policy(mdp, params, gamma)
    return float(mdp.start @ V)


def average_value(mdp: TabularMDP, params: SoftmaxPolicyParams, gamma: float) -> float:
    """Discounted values weighted by the stationary state distribution."""
    pi = policy_matrix(mdp, params)
    d = stationary_distribution(_induced_chain(mdp, pi)[0])
    V, _ = evaluate_policy(mdp, params, gamma)
    return float(d @ V)


def average_reward(mdp: TabularMDP, params: SoftmaxPolicyParams) -> float:
    pi = policy_matrix(mdp, params)
    P_pi, r_pi = _induced_chain(mdp, pi)
    return float(stationary_distribution(P_pi) @ r_pi)


def _score_weighted(params: SoftmaxPolicyParams, pi, weights, Q) -> np.ndarray:
    grad = np.zeros_like(params.theta)
    for s in range(pi.shape[0]):
        for a in range(pi.shape[1]):
            grad += weights[s] * pi[s, a] * softmax_score(params, s, a) * Q[s, a]
    return grad


def policy_gradient_exact(mdp: TabularMDP, params: SoftmaxPolicyParams, gamma: float,
                          weighting: str = "start") -> np.ndarray:
    """Right-hand side of the policy gradient theorem, E[score * Q], computed exactly.

    ``weighting="start"`` uses the discounted occupancy from the start
    distribution (gradient of the start value). ``"average_reward"`` uses the
    stationary distribution with differential action values (gradient of the
    average reward per step; ``gamma`` is ignored).
    """
    pi = policy_matrix(mdp, params)
    P_pi, r_pi = _induced_chain(mdp, pi)
    n = mdp.n_states
    if weighting == "start":
        occupancy = np.linalg.solve((np.eye(n) - gamma * P_pi).T, mdp.start)
        V = np.linalg.solve(np.eye(n) - gamma * P_pi, r_pi)
        Q = mdp.R + gamma * mdp.P @ V
        return _score_weighted(params, pi, occupancy, Q)
    if weighting == "average_reward":
        d = stationary_distribution(P_pi)
        rho = float(d @ r_pi)
        # differential values: (I - P_pi) h = r_pi - rho, with d.h = 0
        A = np.vstack([np.eye(n) - P_pi, d])
        b = np.concatenate([r_pi - rho, [0.0]])
        h = np.linalg.lstsq(A, b, rcond=None)[0]
        Q = mdp.R - rho + mdp.P @ h
        return _score_weighted(params, pi, d, Q)
    raise ValueError(f"unknown weighting {weighting!r}")


def tabular_pg_theorem_check(mdp: TabularMDP, params: SoftmaxPolicyParams, gamma: float,
                             weighting: str = "start", eps: float = 1e-5) -> float:
    """Max-norm gap between E[score * Q] and a finite-difference gradient of the objective."""
    analytic = policy_gradient_exact(mdp, params, gamma, weighting)
    if weighting == "start":
        objective = lambda th: start_value(mdp, params.with_theta(th), gamma)  # noqa: E731
    else:
        objective = lambda th: average_reward(mdp, params.with_theta(th))  # noqa: E731
    numeric = central_diff_grad(objective, params.theta, eps)
    return float(np.max(np.abs(analytic - numeric))) if analytic.size else 0.0
