"""The replay training loop, evaluation and per-epoch bookkeeping.

Per cycle: collect ``rollouts_per_cycle`` exploratory episodes, augment each
with kaleidoscope replay, store real and mirrored trajectories, then run
``train_steps_per_cycle`` DDPG updates on GER-augmented minibatches.  After
every epoch the greedy policy is evaluated on ``eval_episodes`` fresh
episodes.  Only real episodes count towards ``env_steps``.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, mdp
from ._kernels import BACKEND, step_into
from .agent import AgentConfig, BoxCodec, DDPGAgent, RelativeCodec
from .config import normalize
from .envs import EnvConfig, make_env_config, reset
from .replay import GERConfig, MinibatchSpec, ReplayBuffer, assemble_minibatch
from .symmetry import KERConfig, ker_generate, sample_planes

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "epoch",
    "train_success",
    "eval_success",
    "env_steps",
    "wall_s",
    "n_stored_real",
    "n_stored_augmented",
    "relabeled_frac",
    "ker_filtered",
    "critic_loss",
    "mean_q",
]


@dataclass
class EpochRecord:
    epoch: int
    train_success: float
    eval_success: float
    env_steps: int
    wall_s: Optional[float]
    n_stored_real: int
    n_stored_augmented: int
    relabeled_frac: float
    ker_filtered: int
    critic_loss: float
    mean_q: float

    def row(self) -> list:
        out = []
        for col in CSV_COLUMNS:
            v = getattr(self, col)
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(f"{v:.6g}")
            else:
                out.append(str(v))
        return out


@dataclass
class Components:
    env: EnvConfig
    ker: Optional[KERConfig]
    ger: GERConfig
    agent: AgentConfig
    reward: mdp.RewardParams
    train: dict


def build(cfg: dict) -> Components:
    cfg = normalize(cfg)
    env_kw = dict(cfg["env"])
    env = make_env_config(env_kw.pop("task"), **{k: tuple(v) if isinstance(v, list) else v for k, v in env_kw.items()})
    ker = None
    if int(cfg["ker"]["n_ker"]) > 0:
        ker = KERConfig(n_ker=int(cfg["ker"]["n_ker"]), theta_max=float(cfg["ker"]["theta_max"]))
    g = dict(cfg["ger"])
    if g.get("ball_dim") is None:
        g["ball_dim"] = 2 if env.planar else 3
    ger = GERConfig(n_ger=int(g["n_ger"]), delta=float(g["delta"]), k_future=int(g["k_future"]), ball_dim=int(g["ball_dim"]))
    agent = AgentConfig(**cfg["agent"])
    reward = mdp.RewardParams(eps_r=env.eps_r, gamma=agent.gamma)
    ger.check(reward)
    return Components(env, ker, ger, agent, reward, dict(cfg["train"]))


def make_codec(env: EnvConfig, kind: str = "relative"):
    if kind == "box":
        return BoxCodec(*env.action_bounds())
    return RelativeCodec(env.max_step, env.finger_max, mdp.GRIP_POS.start)


def make_agent(c: Components, seed: int) -> DDPGAgent:
    codec = make_codec(c.env, c.train.get("action_codec", "relative"))
    return DDPGAgent(c.env.state_dim, mdp.GOAL_DIM, codec, c.agent, seed=seed)


def run_episodes(env: EnvConfig, policy, starts: list[tuple[np.ndarray, np.ndarray]]) -> list[mdp.Trajectory]:
    """Roll out a batch of episodes in lock step.

    ``policy(obs, goals)`` maps stacked states and goals to stacked actions.
    """
    params = env.kernel_params()
    n = len(starts)
    h = env.horizon
    goals = np.array([g for _, g in starts])
    states = np.zeros((n, h + 1, env.state_dim))
    actions = np.zeros((n, h, mdp.ACTION_DIM))
    states[:, 0] = [s for s, _ in starts]
    for t in range(h):
        a = policy(states[:, t], goals)
        actions[:, t] = a
        for i in range(n):
            step_into(states[i, t], a[i], params, states[i, t + 1])
    return [mdp.make_trajectory(goals[i], states[i], actions[i], env.eps_r, env.goal_key) for i in range(n)]


def evaluate(agent: DDPGAgent, env: EnvConfig, n: int, seed=0) -> float:
    """Success rate of the greedy policy over ``n`` fresh episodes."""
    return evaluate_policy(agent.act, env, n, seed)


def evaluate_policy(policy, env: EnvConfig, n: int, seed=0) -> float:
    """Like :func:`evaluate` for any batched ``policy(obs, goals)`` callable."""
    if n < 1:
        raise ValueError("evaluation needs at least one episode")
    rng = np.random.default_rng(seed)
    trajs = run_episodes(env, policy, [reset(env, rng) for _ in range(n)])
    p = mdp.RewardParams(eps_r=env.eps_r)
    return float(np.mean([mdp.is_successful(t, p) for t in trajs]))


class _Writer:
    """CSV writer that flushes every row so partial runs leave usable output."""

    def __init__(self, path: Optional[Path]):
        self.fh = None
        if path is not None:
            self.fh = open(path, "w", newline="")
            self.w = csv.writer(self.fh, lineterminator="\n")
            self.w.writerow(CSV_COLUMNS)
            self.fh.flush()

    def write(self, rec: EpochRecord) -> None:
        if self.fh is not None:
            self.w.writerow(rec.row())
            self.fh.flush()

    def close(self) -> None:
        if self.fh is not None:
            self.fh.close()


def run_training(cfg: dict, seed: Optional[int] = None, out_dir=None, agent: Optional[DDPGAgent] = None) -> list[EpochRecord]:
    """Train one seed; writes ``progress.csv``, ``manifest.json`` and a checkpoint to ``out_dir``."""
    cfg = normalize(cfg)
    seed = int(cfg["seeds"][0] if seed is None else seed)
    c = build(cfg)
    tr = c.train
    ss = np.random.SeedSequence(seed)
    init_seq, env_seq, explore_seq, ker_seq, batch_seq, eval_seq = ss.spawn(6)
    env_rng = np.random.default_rng(env_seq)
    explore_rng = np.random.default_rng(explore_seq)
    ker_rng = np.random.default_rng(ker_seq)
    batch_rng = np.random.default_rng(batch_seq)
    eval_seed = int(eval_seq.generate_state(1)[0])

    if agent is None:
        agent = make_agent(c, int(init_seq.generate_state(1)[0]))
    buf = ReplayBuffer(int(tr["buffer_size"]), c.env.horizon, c.env.state_dim)
    spec = MinibatchSpec(int(tr["batch_size"]))

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    writer = _Writer(out / "progress.csv" if out else None)
    dump_fh = open(out / "trajectories.txt", "w") if out and tr["dump_trajectories"] else None

    manifest = {
        "library_version": __version__,
        "kernel_backend": BACKEND,
        "seed": seed,
        "config": cfg,
        "env": c.env.to_dict(),
        "ker_planes": [],
    }
    records: list[EpochRecord] = []
    env_steps = n_real = n_aug = 0
    start = time.perf_counter()
    streak = 0
    manifest["status"] = "running"
    try:
        for epoch in range(int(tr["epochs"])):
            successes = []
            relabeled = batch_total = filtered = 0
            losses, qs = [], []
            episodes_left = int(tr["episodes_per_epoch"])
            while episodes_left > 0:
                n_roll = min(int(tr["rollouts_per_cycle"]), episodes_left)
                episodes_left -= n_roll
                starts = [reset(c.env, env_rng) for _ in range(n_roll)]
                trajs = run_episodes(c.env, lambda o, g: agent.act(o, g, explore_rng), starts)
                for traj in trajs:
                    env_steps += traj.horizon
                    successes.append(mdp.is_successful(traj, c.reward))
                    if dump_fh is not None:
                        mdp.dump_trajectories([traj], dump_fh)
                    augmented = []
                    if c.ker is not None:
                        thetas = sample_planes(c.ker, ker_rng)
                        augmented = ker_generate(traj, c.ker, c.env.workspace, c.reward, thetas=thetas)
                        filtered += 2 * c.ker.n_ker - 1 - len(augmented)
                        manifest["ker_planes"].append([round(float(x), 12) for x in thetas])
                    buf.store([traj] + augmented)
                    n_real += traj.horizon
                    n_aug += sum(t.horizon for t in augmented)
                    norm_src = [traj] if tr["norm_from"] == "observed" else [traj] + augmented
                    agent.update_normalizers(
                        np.concatenate([t.states for t in norm_src]),
                        np.concatenate([np.vstack([t.achieved, t.goal[None]]) for t in norm_src]),
                    )
                per_step = tr["target_update"] == "step"
                for _ in range(int(tr["train_steps_per_cycle"])):
                    batch = assemble_minibatch(buf, spec, c.ger, c.reward, batch_rng)
                    d = agent.train_step(batch, update_target=per_step)
                    relabeled += batch.stats["relabeled"]
                    batch_total += len(batch)
                    losses.append(d.critic_loss)
                    qs.append(d.mean_q)
                if not per_step:
                    agent.soft_update()

            eval_rate = evaluate(agent, c.env, int(tr["eval_episodes"]), seed=eval_seed + epoch)
            rec = EpochRecord(
                epoch=epoch,
                train_success=float(np.mean(successes)),
                eval_success=eval_rate,
                env_steps=env_steps,
                wall_s=round(time.perf_counter() - start, 3) if tr["wall_clock"] else None,
                n_stored_real=n_real,
                n_stored_augmented=n_aug,
                relabeled_frac=relabeled / max(batch_total, 1),
                ker_filtered=filtered,
                critic_loss=float(np.mean(losses)) if losses else float("nan"),
                mean_q=float(np.mean(qs)) if qs else float("nan"),
            )
            records.append(rec)
            writer.write(rec)
            log.info("epoch %d eval %.2f train %.2f steps %d", epoch, eval_rate, rec.train_success, env_steps)
            streak = streak + 1 if eval_rate >= float(tr["success_threshold"]) else 0
            if int(tr["stop_at"]) > 0 and streak >= int(tr["stop_at"]):
                break
        manifest["status"] = "complete"
    finally:
        writer.close()
        if dump_fh is not None:
            dump_fh.close()
        if manifest["status"] != "complete":
            manifest["status"] = "aborted"
        if out is not None:
            manifest["epochs_completed"] = len(records)
            with open(out / "manifest.json", "w") as fh:
                json.dump(manifest, fh, indent=1, sort_keys=True)
            agent.save(out / "checkpoint.npz", extra={"env": c.env.to_dict()})
    return records


def episodes_to_threshold(records: list[EpochRecord], episodes_per_epoch: int, threshold: float = 0.9) -> Optional[int]:
    """Real episodes consumed when eval success first reaches ``threshold``."""
    for r in records:
        if r.eval_success >= threshold:
            return (r.epoch + 1) * episodes_per_epoch
    return None


def read_progress(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def record_dict(rec: EpochRecord) -> dict:
    return asdict(rec)


def env_from_dict(d: dict) -> EnvConfig:
    return EnvConfig.from_dict(d)


def default_out_dir(base: str, seed: int) -> str:
    return os.path.join(base, f"seed_{seed}")
