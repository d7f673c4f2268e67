"""Run configuration: a nested JSON document with dotted-key overrides.

Sections and keys (defaults in :data:`DEFAULTS`)::

    env.task            reach | push | slide | push_obstacle | pick_place_3d
    env.<field>         any EnvConfig field (horizon, eps_r, max_step, ...)
    ker.n_ker           0 disables augmentation; >= 1 runs kaleidoscope replay
    ker.theta_max       largest plane angle in radians
    ger.n_ger           copies of every sampled transition per minibatch
    ger.delta           GER ball radius in metres (<= env.eps_r)
    ger.k_future        hindsight ratio k (relabel probability k / (1 + k))
    ger.ball_dim        2 or 3 (defaults to 2 for planar tasks, 3 otherwise)
    agent.<field>       any AgentConfig field
    train.epochs, train.episodes_per_epoch, train.eval_episodes,
    train.rollouts_per_cycle, train.train_steps_per_cycle, train.batch_size,
    train.buffer_size, train.target_update ("cycle" | "step"),
    train.norm_from ("all" | "observed"), train.wall_clock, train.dump_trajectories,
    train.stop_at (stop after this many consecutive epochs at >= success_threshold),
    train.success_threshold, train.action_codec ("relative" | "box")
    seeds               list of integer seeds
"""

from __future__ import annotations

import copy
import json
import math
from typing import Any

DEFAULTS: dict = {
    "env": {"task": "push"},
    "ker": {"n_ker": 0, "theta_max": math.pi / 12},
    "ger": {"n_ger": 1, "delta": 0.0, "k_future": 8, "ball_dim": None},
    "agent": {},
    "train": {
        "epochs": 50,
        "episodes_per_epoch": 100,
        "eval_episodes": 10,
        "rollouts_per_cycle": 1,
        "train_steps_per_cycle": 40,
        "batch_size": 256,
        "buffer_size": 1_000_000,
        "target_update": "cycle",
        "norm_from": "all",
        "wall_clock": True,
        "dump_trajectories": False,
        "stop_at": 0,
        "success_threshold": 0.9,
        "action_codec": "relative",
    },
    "seeds": [0],
}

SECTIONS = ("env", "ker", "ger", "agent", "train")


def deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_dotted(cfg: dict, key: str, value: Any) -> dict:
    out = copy.deepcopy(cfg)
    node = out
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value
    return out


def get_dotted(cfg: dict, key: str, default: Any = None) -> Any:
    node: Any = cfg
    for p in key.split("."):
        if not isinstance(node, dict) or p not in node:
            return default
        node = node[p]
    return node


def parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path) -> dict:
    with open(path) as fh:
        return normalize(json.load(fh))


def normalize(raw: dict) -> dict:
    cfg = deep_merge(DEFAULTS, raw)
    unknown = set(cfg) - set(SECTIONS) - {"seeds", "name"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    if not cfg["seeds"]:
        raise ValueError("seeds must be non-empty")
    if int(cfg["ker"]["n_ker"]) < 0:
        raise ValueError("ker.n_ker must be >= 0")
    t = cfg["train"]
    for key in ("epochs", "episodes_per_epoch", "eval_episodes", "rollouts_per_cycle", "batch_size"):
        if int(t[key]) < 1:
            raise ValueError(f"train.{key} must be >= 1")
    if t["target_update"] not in ("cycle", "step"):
        raise ValueError("train.target_update must be 'cycle' or 'step'")
    if t["norm_from"] not in ("all", "observed"):
        raise ValueError("train.norm_from must be 'all' or 'observed'")
    return cfg


def desk_preset(task: str, **overrides) -> dict:
    """Small, fast settings used by the acceptance runs and the examples."""
    cfg = {
        "env": {"task": task},
        "agent": {"hidden": [64, 64]},
        "train": {
            "epochs": 40,
            "episodes_per_epoch": 10,
            "eval_episodes": 50,
            "rollouts_per_cycle": 2,
            "train_steps_per_cycle": 40,
            "buffer_size": 1_000_000,
            "target_update": "step",
            "stop_at": 2,
        },
    }
    for k, v in overrides.items():
        cfg = set_dotted(cfg, k, v)
    return normalize(cfg)
