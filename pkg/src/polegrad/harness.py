"""Experiments: MC-vs-AC convergence race and cart-pole -> vehicle transfer.

Transfer reading of cart-pole (interpretive, not sourced): a vehicle keeping a
lane along the x-axis is fed to the cart-pole actor as if it were the cart
state. Slot by slot::

    cart position      <- lateral offset y
    cart velocity      <- lateral speed s*sin(heading)
    pole angle         <- wrapped heading error
    pole angular rate  <- yaw rate (s/L)*tan(steer)

each multiplied by a scale. The vehicle's angles are left-positive while the
pole angle is clockwise-positive, so the default scales are -1. Action 1
("push right") steers by +steer_command, action 0 by -steer_command, and the
cart-pole failure limits (2.4 for position, 15 degrees for angle) are reused
as the lane-keeping success test.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .actor_critic import AcNetwork, AcTrainConfig, ac_forward, greedy_action, train_ac
from .bicycle import BicycleConfig, BicycleControl, BicycleState, Trajectory, simulate
from .cartpole import EnvConfig
from .kvconfig import write_csv
from .mc import REINFORCE, McConfig, initial_theta, train_mc
from .numerics import Rng

SOLVE_LEVEL = 195.0
SOLVE_WINDOW = 100
LATERAL_LIMIT = 2.4
HEADING_LIMIT = math.radians(15)


# --- convergence race --------------------------------------------------------


def episodes_to_threshold(rewards: Sequence[float], level: float = SOLVE_LEVEL,
                          window: int = SOLVE_WINDOW) -> Optional[int]:
    """First 1-based episode whose trailing-``window`` mean reward reaches ``level``.

    Before ``window`` episodes exist the mean is over all episodes so far.
    """
    total = 0.0
    for k, r in enumerate(rewards):
        total += r
        if k >= window:
            total -= rewards[k - window]
        if total / min(k + 1, window) >= level:
            return k + 1
    return None


def _reached(rewards: Sequence[float], level: float = SOLVE_LEVEL, window: int = SOLVE_WINDOW) -> bool:
    w = rewards[-window:]
    return sum(w) / len(w) >= level


@dataclass
class ComparisonReport:
    seeds: list[int]
    mc_curves: list[list[int]] = field(default_factory=list)
    ac_curves: list[list[tuple[float, float]]] = field(default_factory=list)
    mc_episodes_to_threshold: list[Optional[int]] = field(default_factory=list)
    ac_episodes_to_threshold: list[Optional[int]] = field(default_factory=list)

    def rows(self):
        for i, seed in enumerate(self.seeds):
            for method, at in (("mc", self.mc_episodes_to_threshold[i]),
                               ("ac", self.ac_episodes_to_threshold[i])):
                yield (seed, method, at, int(at is not None))

    def to_csv(self, path) -> None:
        write_csv(path, ("seed", "method", "episodes_to_threshold", "converged"), self.rows())

    def ac_faster_everywhere(self) -> bool:
        """AC strictly faster on every seed where both methods converged."""
        return all(a < m for a, m in zip(self.ac_episodes_to_threshold, self.mc_episodes_to_threshold)
                   if a is not None and m is not None)


def default_race_configs() -> tuple[EnvConfig, AcTrainConfig, McConfig]:
    return EnvConfig(max_steps=200), AcTrainConfig(episode_cap=5000), McConfig(episodes=2000, mode=REINFORCE)


def _race_one(args):
    env_config, ac_config, mc_config, seed = args
    rng = Rng(seed)
    theta0 = initial_theta(rng)
    _, lengths = train_mc(env_config, mc_config, theta0, rng, until=_reached)

    def until(history):
        return _reached([h[0] for h in history])

    _, history, _ = train_ac(env_config, ac_config, Rng(seed), until=until)
    return lengths, history


def compare_convergence(env_config: EnvConfig, ac_config: AcTrainConfig, mc_config: McConfig,
                        seeds: Sequence[int], workers: int = 1) -> ComparisonReport:
    """Race MC and AC per seed to the same trailing-100 threshold.

    Each method gets a fresh ``Rng(seed)``, so a run matches ``train-mc`` /
    ``train-ac`` with the same seed. Training stops once the threshold is met
    or the method's episode budget is spent.
    """
    if not seeds:
        raise ValueError("at least one seed required")
    if mc_config.mode != REINFORCE:
        raise ValueError("the race uses reinforce-mode MC")
    jobs = [(env_config, ac_config, mc_config, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_race_one, jobs))
    else:
        results = [_race_one(j) for j in jobs]
    report = ComparisonReport(list(seeds))
    for lengths, history in results:
        report.mc_curves.append(lengths)
        report.ac_curves.append(history)
        report.mc_episodes_to_threshold.append(episodes_to_threshold(lengths))
        report.ac_episodes_to_threshold.append(episodes_to_threshold([h[0] for h in history]))
    return report


# --- transfer -----------------------------------------------------------------


@dataclass(frozen=True)
class TransferMapping:
    lateral_offset_scale: float = -1.0
    lateral_vel_scale: float = -1.0
    heading_err_scale: float = -1.0
    heading_rate_scale: float = -1.0
    steer_command: float = 0.2

    def __post_init__(self):
        for v in (self.lateral_offset_scale, self.lateral_vel_scale,
                  self.heading_err_scale, self.heading_rate_scale):
            if not math.isfinite(v):
                raise ValueError("mapping scales must be finite")
        if not self.steer_command > 0:
            raise ValueError("steer_command must be positive")


TRANSFER_CONTROL_DT = 0.02


def lane_observation(state: BicycleState, mapping: TransferMapping, wheelbase: float,
                     steer: float) -> np.ndarray:
    """Map a lane-keeping vehicle state onto the four cart-pole observation slots."""
    s = state.speed
    return np.array([
        state.y * mapping.lateral_offset_scale,
        s * math.sin(state.heading) * mapping.lateral_vel_scale,
        state.wrapped_heading * mapping.heading_err_scale,
        (s / wheelbase) * math.tan(steer) * mapping.heading_rate_scale,
    ])


def mirror_network(net: AcNetwork) -> AcNetwork:
    """Network with ``probs'(obs) = reversed(probs(-obs))``, exactly."""
    mirrored = net.copy()
    v = mirrored.views()
    v["W1"][...] = -net.W1
    v["Wa"][...] = net.Wa[::-1]
    v["ba"][...] = net.ba[::-1]
    return AcNetwork(mirrored.params, mirrored.adam)


@dataclass
class TransferMetrics:
    max_abs_y: float
    max_abs_heading: float
    survived: bool

    def to_csv(self, path) -> None:
        write_csv(path, ("max_abs_y", "max_abs_heading", "survived"),
                  [(self.max_abs_y, self.max_abs_heading, int(self.survived))])


def transfer_metrics(traj: Trajectory) -> TransferMetrics:
    max_y = max(abs(s.y) for s in traj.states)
    max_h = max(abs(s.wrapped_heading) for s in traj.states)
    return TransferMetrics(max_y, max_h, max_y <= LATERAL_LIMIT and max_h <= HEADING_LIMIT)


Actor = Union[AcNetwork, Callable[[np.ndarray], int]]


def transfer_drive(actor: Actor, mapping: TransferMapping, bicycle_config: BicycleConfig,
                   initial: BicycleState, duration: float) -> tuple[Trajectory, TransferMetrics]:
    """Drive the vehicle at constant speed with the greedy cart-pole actor as steering controller."""
    if isinstance(actor, AcNetwork):
        net = actor

        def choose(obs):
            return greedy_action(ac_forward(net, obs)[0])
    else:
        choose = actor

    last_steer = [0.0]

    def controller(state: BicycleState) -> BicycleControl:
        obs = lane_observation(state, mapping, bicycle_config.wheelbase, last_steer[0])
        steer = mapping.steer_command if choose(obs) == 1 else -mapping.steer_command
        last_steer[0] = steer
        return BicycleControl(0.0, steer)

    traj = simulate(initial, controller, bicycle_config, duration)
    return traj, transfer_metrics(traj)


def transfer_config(wheelbase: float = 0.3, steer_limit: float = 0.4) -> BicycleConfig:
    return BicycleConfig(wheelbase=wheelbase, dt=TRANSFER_CONTROL_DT, steer_limit=steer_limit)


def transfer_initial_state() -> BicycleState:
    """The acceptance start: 0.1 m left of the line, heading 5 degrees, 1 m/s."""
    return BicycleState(0.0, 0.1, math.radians(5), 1.0)
