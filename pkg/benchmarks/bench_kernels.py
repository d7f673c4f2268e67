"""Compare the compiled and pure-Python dynamics kernels.

Usage::

    python benchmarks/bench_kernels.py [--steps 20000]

Reports per-step latency for every task on each available backend, the
largest absolute difference between backends, and how much of a full
training episode the step kernel accounts for.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from iter_replay._kernels import available_backends
from iter_replay.config import desk_preset
from iter_replay.envs import TASKS, make_env_config, reset
from iter_replay.training import build, make_agent, run_episodes


def _inputs(task: str, n: int, seed: int = 0):
    cfg = make_env_config(task)
    rng = np.random.default_rng(seed)
    states, actions = [], []
    for _ in range(n):
        s, _ = reset(cfg, rng)
        s[0:2] += rng.normal(0.0, 0.05, 2)
        states.append(s)
        actions.append(np.concatenate([s[0:3] + rng.normal(0.0, 0.05, 3), [rng.uniform(0.0, cfg.finger_max)]]))
    return cfg.kernel_params(), states, actions


def bench_step(n_steps: int) -> None:
    backends = available_backends()
    print(f"{'task':<15}" + "".join(f"{name + ' us/step':>18}" for name in backends) + f"{'max |diff|':>14}")
    for task in TASKS:
        p, states, actions = _inputs(task, n_steps)
        outs, times = {}, {}
        for name, mod in backends.items():
            out = np.zeros((n_steps, states[0].shape[0]))
            t0 = time.perf_counter()
            for i in range(n_steps):
                mod.step_into(states[i], actions[i], p, out[i])
            times[name] = (time.perf_counter() - t0) / n_steps * 1e6
            outs[name] = out
        ref = outs["python"]
        diff = max(float(np.abs(o - ref).max()) for o in outs.values())
        print(f"{task:<15}" + "".join(f"{times[name]:>18.2f}" for name in backends) + f"{diff:>14.2e}")


def bench_episode(n_episodes: int = 20) -> None:
    """Share of an exploratory rollout spent in the dynamics step."""
    c = build(desk_preset("push"))
    agent = make_agent(c, 0)
    rng = np.random.default_rng(0)
    starts = [reset(c.env, rng) for _ in range(n_episodes)]
    t0 = time.perf_counter()
    run_episodes(c.env, lambda o, g: agent.act(o, g, rng), starts)
    per_ep = (time.perf_counter() - t0) / n_episodes
    print(f"push rollout with the active backend: {per_ep * 1e3:.2f} ms/episode ({c.env.horizon} steps)")


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    args = ap.parse_args(argv)
    bench_step(args.steps)
    bench_episode()


if __name__ == "__main__":
    main()
