"""Command-line entry point.

Every run writes ``manifest.txt`` (flat ``key = value``) next to its CSV
outputs; ``polegrad replay <manifest> --out <dir>`` re-runs it.
"""
from __future__ import annotations

import argparse
import math
import os
import statistics
import sys
from pathlib import Path

from . import __version__, kernels
from .actor_critic import AcNetwork, AcTrainConfig, greedy_evaluate, train_ac
from .bicycle import BicycleConfig, BicycleControl, BicycleState, nonholonomic_residual, simulate, turning_radius
from .cartpole import EnvConfig, random_rollout
from .gradcheck import run_suite
from .harness import (
    TransferMapping,
    compare_convergence,
    default_race_configs,
    transfer_config,
    transfer_drive,
)
from .kvconfig import dataclass_from_kv, dataclass_to_kv, read_kv, write_csv, write_kv
from .mc import McConfig, initial_theta, train_mc
from .numerics import Rng

DEFAULT_SEED = 42
MANIFEST = "manifest.txt"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _default_seed() -> int:
    env = os.environ.get("POLEGRAD_SEED")
    if env is None or env == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"POLEGRAD_SEED must be an integer, got {env!r}") from None


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default $POLEGRAD_SEED or 42)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--env-config", default=None, help="cart-pole config file (key = value lines)")
    common.add_argument("--max-steps", type=int, default=None, help="override env max_steps")

    parser = _Parser(prog="polegrad", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"polegrad {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train-mc", parents=[common], help="Monte-Carlo policy gradient")
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--mode", choices=["paper_faithful", "reinforce"], default="paper_faithful")
    p.add_argument("--gamma", type=float, default=1.0)

    p = sub.add_parser("train-ac", parents=[common], help="actor-critic")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--episode-cap", type=int, default=5000)
    p.add_argument("--solve-threshold", type=float, default=195.0)
    p.add_argument("--detach-value", action="store_true",
                   help="treat the critic value as a constant in the actor loss")
    p.add_argument("--eval-episodes", type=int, default=20)

    p = sub.add_parser("sim-bicycle", parents=[common], help="constant-control bicycle trajectory")
    p.add_argument("--wheelbase", type=float, default=0.3)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--steer-limit", type=float, default=0.4)
    p.add_argument("--steer", type=float, default=0.2618)
    p.add_argument("--accel", type=float, default=0.0)
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--duration", type=float, default=10.0)

    p = sub.add_parser("transfer", parents=[common], help="drive the bicycle with a cart-pole actor")
    p.add_argument("--actor", default=None, help="network .npz from train-ac (default: train one)")
    p.add_argument("--duration", type=float, default=20.0)
    p.add_argument("--y0", type=float, default=0.1)
    p.add_argument("--heading0-deg", type=float, default=5.0)
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--wheelbase", type=float, default=0.3)
    p.add_argument("--steer-command", type=float, default=0.2)
    for name in ("lateral-offset", "lateral-vel", "heading-err", "heading-rate"):
        p.add_argument(f"--{name}-scale", type=float, default=-1.0)

    p = sub.add_parser("compare", parents=[common], help="MC vs AC episodes-to-threshold race")
    p.add_argument("--n-seeds", type=int, default=5, help="seeds are seed, seed+1, ...")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--mc-lr", type=float, default=0.02)
    p.add_argument("--mc-budget", type=int, default=2000)
    p.add_argument("--ac-budget", type=int, default=5000)

    p = sub.add_parser("check-grad", parents=[common], help="gradient oracle suite")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--mdps", type=int, default=20)

    p = sub.add_parser("random-baseline", parents=[common], help="uniform-random action episodes")
    p.add_argument("--episodes", type=int, default=200)

    p = sub.add_parser("replay", help="re-run from a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    return parser


def _env_config(args, items=None) -> EnvConfig:
    if items is not None:
        return dataclass_from_kv(EnvConfig, items, prefix="env.")
    # the convergence race is defined on the 200-step episode cap
    cfg = default_race_configs()[0] if args.command == "compare" else EnvConfig()
    if args.env_config:
        cfg = dataclass_from_kv(EnvConfig, read_kv(args.env_config), base=cfg, strict=True)
    if args.max_steps is not None:
        cfg = dataclass_from_kv(EnvConfig, {"max_steps": str(args.max_steps)}, base=cfg)
    return cfg


_SKIP = {"command", "out", "env_config", "max_steps", "seed", "manifest"}


def _write_manifest(out: Path, args, seed: int, env: EnvConfig, outputs: list[str]) -> None:
    items = {"subcommand": args.command, "version": __version__, "backend": kernels.BACKEND, "seed": seed}
    for k, v in sorted(vars(args).items()):
        if k not in _SKIP:
            items[f"args.{k}"] = v
    items.update(dataclass_to_kv(env, prefix="env."))
    items["outputs"] = ",".join(outputs)
    write_kv(out / MANIFEST, items)


# --- subcommands -------------------------------------------------------------


def cmd_train_mc(args, env, seed, out):
    rng = Rng(seed)
    cfg = McConfig(lr=args.lr, episodes=args.episodes, mode=args.mode, gamma=args.gamma)
    theta0 = initial_theta(rng)
    theta, lengths = train_mc(env, cfg, theta0, rng)
    write_csv(out / "lengths.csv", ("episode", "length"), ((i + 1, n) for i, n in enumerate(lengths)))
    write_csv(out / "theta.csv", ("index", "theta0", "theta"), ((i, a, b) for i, (a, b) in enumerate(zip(theta0, theta))))
    for i, n in enumerate(lengths, 1):
        print(f"Episode {i} finished after {n} timesteps")
    print(f"best episode: {max(lengths) if lengths else 0} steps")
    return ["lengths.csv", "theta.csv"], True


def cmd_train_ac(args, env, seed, out):
    cfg = AcTrainConfig(lr=args.lr, gamma=args.gamma, episode_cap=args.episode_cap,
                        solve_threshold=args.solve_threshold,
                        value_grad_in_actor_loss=not args.detach_value)
    net, history, solved_at = train_ac(env, cfg, Rng(seed), progress=print)
    write_csv(out / "history.csv", ("episode", "episode_reward", "running_reward"),
              ((i + 1, r, run) for i, (r, run) in enumerate(history)))
    net.save(out / "actor.npz")
    outputs = ["history.csv"]
    if solved_at is None:
        print(f"not solved within {cfg.episode_cap} episodes")
    else:
        print(f"solved at episode {solved_at}")
    if args.eval_episodes > 0:
        rewards = greedy_evaluate(net, env, Rng(seed).spawn(1), args.eval_episodes)
        write_csv(out / "greedy_eval.csv", ("episode", "reward"), ((i + 1, r) for i, r in enumerate(rewards)))
        outputs.append("greedy_eval.csv")
        print(f"greedy evaluation mean reward: {statistics.fmean(rewards):.2f}")
    return outputs, True


def cmd_sim_bicycle(args, env, seed, out):
    cfg = BicycleConfig(wheelbase=args.wheelbase, dt=args.dt, steer_limit=args.steer_limit)
    control = BicycleControl(args.accel, args.steer)
    traj = simulate(BicycleState(0.0, 0.0, 0.0, args.speed), lambda s: control, cfg, args.duration)
    traj.to_csv(out / "trajectory.csv")
    applied = traj.controls[0].steer if traj.controls else args.steer
    rho = turning_radius(cfg.wheelbase, applied)
    print(f"turning radius: {rho:.6g} m")
    if len(traj) >= 2:
        print(f"non-holonomic residual: {nonholonomic_residual(traj.states, cfg.dt):.3e}")
    if traj.any_clamped:
        print("warning: steering was clamped to the limit")
    f = traj.states[-1]
    print(f"final state: x={f.x:.6g} y={f.y:.6g} heading={f.heading:.6g} speed={f.speed:.6g}")
    return ["trajectory.csv"], True


def cmd_transfer(args, env, seed, out):
    if args.actor:
        net = AcNetwork.load(args.actor)
    else:
        net, _, solved_at = train_ac(env, AcTrainConfig(), Rng(seed))
        print(f"trained actor (solved at episode {solved_at})")
    mapping = TransferMapping(args.lateral_offset_scale, args.lateral_vel_scale,
                              args.heading_err_scale, args.heading_rate_scale, args.steer_command)
    initial = BicycleState(0.0, args.y0, math.radians(args.heading0_deg), args.speed)
    traj, metrics = transfer_drive(net, mapping, transfer_config(args.wheelbase), initial, args.duration)
    traj.to_csv(out / "trajectory.csv")
    metrics.to_csv(out / "transfer_metrics.csv")
    print(f"max |y| = {metrics.max_abs_y:.4f} m, max |heading| = {math.degrees(metrics.max_abs_heading):.2f} deg, "
          f"survived = {metrics.survived}")
    return ["trajectory.csv", "transfer_metrics.csv"], True


def cmd_compare(args, env, seed, out):
    ac_cfg = AcTrainConfig(episode_cap=args.ac_budget)
    mc_cfg = McConfig(lr=args.mc_lr, episodes=args.mc_budget, mode="reinforce")
    seeds = [seed + i for i in range(args.n_seeds)]
    report = compare_convergence(env, ac_cfg, mc_cfg, seeds, workers=args.workers)
    report.to_csv(out / "report.csv")
    outputs = ["report.csv"]
    for s, curve, hist in zip(seeds, report.mc_curves, report.ac_curves):
        write_csv(out / f"mc_curve_{s}.csv", ("episode", "length"), ((i + 1, n) for i, n in enumerate(curve)))
        write_csv(out / f"ac_history_{s}.csv", ("episode", "episode_reward", "running_reward"),
                  ((i + 1, r, run) for i, (r, run) in enumerate(hist)))
        outputs += [f"mc_curve_{s}.csv", f"ac_history_{s}.csv"]
    for row in report.rows():
        print("seed {} {}: episodes to threshold = {}".format(row[0], row[1], row[2] if row[2] is not None else "not reached"))
    print(f"AC faster on every seed where both converged: {report.ac_faster_everywhere()}")
    return outputs, True


def cmd_check_grad(args, env, seed, out):
    results = run_suite(seed, n_episodes=args.episodes, n_mdps=args.mdps)
    for r in results:
        print(r.line())
    write_csv(out / "check_grad.csv", ("check", "max_error", "threshold", "passed"),
              ((r.name, r.value, r.threshold, int(r.passed)) for r in results))
    return ["check_grad.csv"], all(r.passed for r in results)


def cmd_random_baseline(args, env, seed, out):
    rng = Rng(seed)
    lengths = [random_rollout(env, rng) for _ in range(args.episodes)]
    write_csv(out / "lengths.csv", ("episode", "length"), ((i + 1, n) for i, n in enumerate(lengths)))
    print(f"mean length {statistics.fmean(lengths):.2f}, median {statistics.median(lengths)}")
    return ["lengths.csv"], True


COMMANDS = {
    "train-mc": cmd_train_mc,
    "train-ac": cmd_train_ac,
    "sim-bicycle": cmd_sim_bicycle,
    "transfer": cmd_transfer,
    "compare": cmd_compare,
    "check-grad": cmd_check_grad,
    "random-baseline": cmd_random_baseline,
}


def _replay_namespace(parser, manifest_path: str, out: str):
    items = read_kv(manifest_path)
    command = items.get("subcommand")
    if command not in COMMANDS:
        raise UsageError(f"manifest has no valid subcommand: {command!r}")
    if items.get("backend") != kernels.BACKEND:
        print(f"warning: manifest backend {items.get('backend')} differs from {kernels.BACKEND}; "
              "outputs may differ in the last bits", file=sys.stderr)
    argv = [command, "--out", out, "--seed", items["seed"]]
    sub = parser._subparsers._group_actions[0].choices[command]  # noqa: SLF001
    for action in sub._actions:  # noqa: SLF001
        key = f"args.{action.dest}"
        if key not in items:
            continue
        value = items[key]
        if isinstance(action, argparse._StoreTrueAction):  # noqa: SLF001
            if value == "true":
                argv.append(action.option_strings[0])
        elif value != "":
            argv += [action.option_strings[0], value]
    args = parser.parse_args(argv)
    return args, _env_config(args, items)


def run(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    if args.command == "replay":
        args, env = _replay_namespace(parser, args.manifest, args.out)
    else:
        env = _env_config(args)
    seed = args.seed if args.seed is not None else _default_seed()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs, ok = COMMANDS[args.command](args, env, seed, out)
    _write_manifest(out, args, seed, env, outputs)
    return 0 if ok else 2


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        return run(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError, RuntimeError) as e:
        print(f"polegrad: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
