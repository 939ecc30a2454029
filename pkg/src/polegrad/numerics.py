"""Deterministic PRNG, Adam, Huber loss and finite-difference gradients."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

MASK64 = (1 << 64) - 1
# machine epsilon of float32, used to guard return normalization
FLOAT32_EPS = float(np.finfo(np.float32).eps)
_INV_2_53 = 1.0 / (1 << 53)


class InvalidRangeError(ValueError):
    pass


class InvalidDistributionError(ValueError):
    pass


class ShapeError(ValueError):
    pass


def _splitmix64(x: int) -> tuple[int, int]:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Rng:
    """xoshiro256** generator seeded through splitmix64.

    Pure integer arithmetic, so a seed yields the same stream on every
    platform and Python build.
    """

    __slots__ = ("seed", "_s")

    def __init__(self, seed: int):
        self.seed = int(seed)
        x = self.seed & MASK64
        s = []
        for _ in range(4):
            x, z = _splitmix64(x)
            s.append(z)
        self._s = s

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform(self, lo: float, hi: float) -> float:
        if not lo < hi:
            raise InvalidRangeError(f"empty interval [{lo}, {hi})")
        u = lo + (hi - lo) * self.random()
        # rounding can land exactly on hi
        return u if u < hi else math.nextafter(hi, lo)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection on the top bits."""
        if n <= 0:
            raise InvalidRangeError("n must be positive")
        k = max(1, (n - 1).bit_length())
        while True:
            r = self.next_u64() >> (64 - k)
            if r < n:
                return r

    def choice(self, probs: Sequence[float]) -> int:
        """Index ``i`` drawn with probability ``probs[i]``."""
        total = 0.0
        for p in probs:
            if not p >= 0.0:
                raise InvalidDistributionError(f"negative or NaN probability {p}")
            total += p
        if len(probs) == 0 or abs(total - 1.0) > 1e-9:
            raise InvalidDistributionError(f"probabilities sum to {total}")
        u = self.random() * total
        acc = 0.0
        last = 0
        for i, p in enumerate(probs):
            acc += p
            if p > 0.0:
                last = i
                if u < acc:
                    return i
        return last

    def spawn(self, stream: int) -> "Rng":
        """Independent generator for a numbered sub-stream of this seed."""
        _, z = _splitmix64((self.seed * 0x9E3779B97F4A7C15 + stream) & MASK64)
        return Rng(z)

    def getstate(self) -> tuple[int, ...]:
        return tuple(self._s)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-7

    @classmethod
    def zeros(cls, n: int, **hyper) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), **hyper)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam step. Inputs are not modified."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if not (params.shape == grads.shape == state.m.shape == state.v.shape):
        raise ShapeError(
            f"shapes differ: params {params.shape}, grads {grads.shape}, "
            f"m {state.m.shape}, v {state.v.shape}"
        )
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * (grads * grads)
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    return new_params, replace(state, m=m, v=v, t=t)


def huber(value: float, target: float, delta: float = 1.0) -> float:
    r = abs(target - value)
    if r <= delta:
        return 0.5 * r * r
    return delta * (r - 0.5 * delta)


def huber_grad(value: float, target: float, delta: float = 1.0) -> float:
    """Derivative of ``huber`` with respect to ``value``."""
    r = target - value
    if r > delta:
        return -delta
    if r < -delta:
        return delta
    return -r


def finite_diff_grad(f: Callable[[np.ndarray], float], theta, eps: float = 1e-6) -> np.ndarray:
    """Forward-difference gradient: (f(theta + eps*u_k) - f(theta)) / eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    theta = np.array(theta, dtype=float)
    f0 = f(theta)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        shifted = theta.copy()
        shifted.flat[k] += eps
        grad.flat[k] = (f(shifted) - f0) / eps
    return grad


def central_diff_grad(f: Callable[[np.ndarray], float], theta, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient, second-order accurate; used as a test oracle."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    theta = np.array(theta, dtype=float)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up.flat[k] += eps
        dn.flat[k] -= eps
        grad.flat[k] = (f(up) - f(dn)) / (2.0 * eps)
    return grad


def max_relative_error(a, b, floor: float = 1e-8) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
