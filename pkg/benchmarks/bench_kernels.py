"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Times each kernel in isolation, then a full actor-critic training episode
with every kernel swapped to one backend.
"""
import argparse
import timeit
from contextlib import contextmanager

import numpy as np

from polegrad import kernels
from polegrad.actor_critic import NUM_HIDDEN, AcTrainConfig, ac_episode_update, ac_init
from polegrad.cartpole import EnvConfig
from polegrad.numerics import Rng

KERNELS = ("cartpole_step", "ac_forward", "ac_backward")


@contextmanager
def use_backend(module):
    saved = {name: getattr(kernels, name) for name in KERNELS}
    for name in KERNELS:
        setattr(kernels, name, getattr(module, name))
    try:
        yield
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def kernel_cases(module):
    net = ac_init(Rng(0))
    obs = np.array([0.01, -0.02, 0.03, 0.04])
    h, probs, logp = np.empty(NUM_HIDDEN), np.empty(2), np.empty(2)
    T = 200
    obs_t = np.tile(obs, (T, 1))
    hid_t = np.abs(np.tile(net.W1 @ obs, (T, 1)))
    dlogits = np.full((T, 2), 0.1)
    dvalue = np.full(T, 0.2)
    grads = [np.zeros_like(a) for a in (net.W1, net.b1, net.Wa, net.ba, net.Wc, net.bc)]
    return {
        "cartpole_step": (lambda: module.cartpole_step(0.01, 0.0, 0.02, 0.0, 10.0, 9.8, 1.0, 0.1, 0.5, 0.02), 20000),
        "ac_forward": (lambda: module.ac_forward(net.W1, net.b1, net.Wa, net.ba, net.Wc, net.bc,
                                                 obs, h, probs, logp), 5000),
        "ac_backward (T=200)": (lambda: module.ac_backward(net.Wa, net.Wc, obs_t, hid_t, dlogits, dvalue,
                                                           *grads), 200),
    }


def episode_case():
    env, cfg = EnvConfig(), AcTrainConfig()
    net0 = ac_init(Rng(1))

    def run():
        ac_episode_update(net0, env, cfg, Rng(2))
    return run, 20


def best_per_call(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the python backend only")
    names = sorted(backends, reverse=True)
    print(f"{'case':<24}" + "".join(f"{n + ' (us)':>16}" for n in names) + (f"{'speedup':>10}" if len(names) > 1 else ""))
    rows = {}
    for n in names:
        for case, (fn, number) in kernel_cases(backends[n]).items():
            rows.setdefault(case, {})[n] = best_per_call(fn, number, args.repeat)
        with use_backend(backends[n]):
            fn, number = episode_case()
            rows.setdefault("AC training episode", {})[n] = best_per_call(fn, number, args.repeat)
    for case, times in rows.items():
        line = f"{case:<24}" + "".join(f"{times[n] * 1e6:>16.2f}" for n in names)
        if len(names) > 1:
            line += f"{times['python'] / times['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
