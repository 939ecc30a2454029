"""Kinematic bicycle model with the rear axle as origin.

    x' = s cos(heading),  y' = s sin(heading),  heading' = s tan(steer) / L,  s' = a

Steering is left-positive. Integration is explicit Euler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .kvconfig import write_csv

HALF_PI = math.pi / 2


class SteeringSingularityError(ValueError):
    """Steering angle at or beyond +/- pi/2, where tan() blows up."""


class BicycleState(NamedTuple):
    x: float
    y: float
    heading: float  # unwrapped
    speed: float

    @property
    def wrapped_heading(self) -> float:
        return wrap_angle(self.heading)


class BicycleControl(NamedTuple):
    accel: float
    steer: float


@dataclass(frozen=True)
class BicycleConfig:
    wheelbase: float = 0.3
    dt: float = 1e-2
    steer_limit: float = 0.4

    def __post_init__(self):
        if not self.wheelbase > 0:
            raise ValueError("wheelbase must be positive")
        if not self.dt >= 0:
            raise ValueError("dt must be non-negative")
        if not 0 < self.steer_limit < HALF_PI:
            raise ValueError("steer_limit must lie in (0, pi/2)")


class StepRecord(NamedTuple):
    state: BicycleState
    control: BicycleControl  # control actually applied, after clamping
    clamped: bool


def wrap_angle(a: float) -> float:
    """Map to (-pi, pi]."""
    w = math.fmod(a, 2 * math.pi)
    if w > math.pi:
        w -= 2 * math.pi
    elif w <= -math.pi:
        w += 2 * math.pi
    return w


def _check_steer(phi: float) -> None:
    if not abs(phi) < HALF_PI:
        raise SteeringSingularityError(f"|steer| must be < pi/2, got {phi}")


def derivatives(state: BicycleState, control: BicycleControl, L: float) -> tuple[float, float, float, float]:
    _check_steer(control.steer)
    s = state.speed
    return (
        s * math.cos(state.heading),
        s * math.sin(state.heading),
        s * math.tan(control.steer) / L,
        control.accel,
    )


def turning_radius(L: float, phi: float) -> float:
    """L / tan(phi); ``math.inf`` for straight-ahead steering."""
    _check_steer(phi)
    if phi == 0:
        return math.inf
    return L / math.tan(phi)


def clamp_control(control: BicycleControl, config: BicycleConfig) -> tuple[BicycleControl, bool]:
    lim = config.steer_limit
    if -lim <= control.steer <= lim:
        return control, False
    return BicycleControl(control.accel, math.copysign(lim, control.steer)), True


def step_euler(state: BicycleState, control: BicycleControl, config: BicycleConfig) -> StepRecord:
    """One Euler step; steering outside the limit is clamped and flagged."""
    control, clamped = clamp_control(control, config)
    dx, dy, dth, ds = derivatives(state, control, config.wheelbase)
    dt = config.dt
    nxt = BicycleState(state.x + dt * dx, state.y + dt * dy, state.heading + dt * dth, state.speed + dt * ds)
    return StepRecord(nxt, control, clamped)


def n_steps(duration: float, dt: float) -> int:
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if duration == 0:
        return 0
    if dt == 0:
        raise ValueError("dt must be positive to simulate a nonzero duration")
    # tolerate duration/dt landing a hair above an integer
    return math.ceil(duration / dt - 1e-9)


@dataclass
class Trajectory:
    states: list[BicycleState]
    controls: list[BicycleControl]  # controls[k] drives states[k] -> states[k+1]
    clamped: list[bool]
    dt: float

    def __len__(self):
        return len(self.states)

    def xy(self) -> np.ndarray:
        return np.array([(s.x, s.y) for s in self.states])

    @property
    def any_clamped(self) -> bool:
        return any(self.clamped)

    def to_csv(self, path) -> None:
        rows = []
        for k, s in enumerate(self.states):
            if k < len(self.controls):
                c, cl = self.controls[k], self.clamped[k]
            else:
                c, cl = BicycleControl(0.0, 0.0), False
            rows.append((k * self.dt, s.x, s.y, s.heading, s.speed, c.steer, c.accel, int(cl)))
        write_csv(path, ("t", "x", "y", "heading", "speed", "steer", "accel", "clamped"), rows)


def simulate(state0: BicycleState, controller: Callable[[BicycleState], BicycleControl],
             config: BicycleConfig, duration: float) -> Trajectory:
    """Closed-loop rollout returning ceil(duration/dt) + 1 states including ``state0``."""
    traj = Trajectory([state0], [], [], config.dt)
    state = state0
    for _ in range(n_steps(duration, config.dt)):
        rec = step_euler(state, controller(state), config)
        state = rec.state
        traj.states.append(state)
        traj.controls.append(rec.control)
        traj.clamped.append(rec.clamped)
    return traj


def nonholonomic_residual(states, dt: float) -> float:
    """max_k |-dx sin(heading_k) + dy cos(heading_k)| / dt (lateral slip speed)."""
    if len(states) < 2:
        raise ValueError("need at least two states")
    worst = 0.0
    for a, b in zip(states[:-1], states[1:]):
        r = abs(-(b.x - a.x) * math.sin(a.heading) + (b.y - a.y) * math.cos(a.heading)) / dt
        worst = max(worst, r)
    return worst
