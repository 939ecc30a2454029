"""Cart-pole balancing environment with +/- force actions and +1 reward per step."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .numerics import Rng


class TerminalStateError(RuntimeError):
    """Raised when stepping an episode that has already ended."""


@dataclass(frozen=True)
class EnvConfig:
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    pole_half_length: float = 0.5
    force_mag: float = 10.0
    tau: float = 0.02
    theta_limit: float = 15 * 2 * math.pi / 360
    x_limit: float = 2.4
    max_steps: int = 500

    def __post_init__(self):
        for name in ("gravity", "cart_mass", "pole_mass", "pole_half_length",
                     "force_mag", "tau", "theta_limit", "x_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class CartState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float
    t: int = 0
    done: bool = False

    @property
    def obs(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot])


def is_terminal(state: CartState, config: EnvConfig) -> bool:
    return (
        abs(state.theta) > config.theta_limit
        or abs(state.x) > config.x_limit
        or state.t >= config.max_steps
    )


def reset(config: EnvConfig, rng: Rng) -> CartState:
    x, x_dot, theta, theta_dot = (rng.uniform(-0.05, 0.05) for _ in range(4))
    return CartState(x, x_dot, theta, theta_dot, 0, False)


def step(state: CartState, action: int, config: EnvConfig) -> tuple[CartState, float, bool]:
    """Advance one Euler step of length ``tau``; the terminating step still earns 1.0."""
    if state.done:
        raise TerminalStateError("episode already terminated; call reset()")
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action!r}")
    force = config.force_mag if action == 1 else -config.force_mag
    x, x_dot, theta, theta_dot = kernels.cartpole_step(
        state.x, state.x_dot, state.theta, state.theta_dot, force,
        config.gravity, config.cart_mass, config.pole_mass, config.pole_half_length, config.tau,
    )
    nxt = CartState(x, x_dot, theta, theta_dot, state.t + 1)
    done = is_terminal(nxt, config)
    if done:
        nxt = CartState(x, x_dot, theta, theta_dot, nxt.t, True)
    return nxt, 1.0, done


def random_rollout(config: EnvConfig, rng: Rng) -> int:
    state = reset(config, rng)
    done = False
    while not done:
        state, _, done = step(state, rng.randbelow(2), config)
    return state.t
