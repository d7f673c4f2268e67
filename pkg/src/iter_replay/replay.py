"""Trajectory replay buffer and hindsight minibatch assembly.

Trajectories are kept whole so that future achieved goals can be looked up
when a transition is replayed.  Transition ``i`` (1-based) of a trajectory
is ``(s_{i-1}, a_i, r_i, s_i)``; in the arrays below it lives at row
``i - 1`` of ``actions`` and uses rows ``i - 1`` and ``i`` of ``states``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import mdp
from .mdp import RewardParams, Trajectory


@dataclass(frozen=True)
class GERConfig:
    n_ger: int = 1
    delta: float = 0.0
    k_future: int = 8
    ball_dim: int = 3

    def __post_init__(self):
        if int(self.n_ger) < 1:
            raise ValueError("n_ger must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if int(self.k_future) < 1:
            raise ValueError("k_future must be >= 1")
        if self.ball_dim not in (2, 3):
            raise ValueError("ball_dim must be 2 or 3")

    @property
    def relabel_prob(self) -> float:
        return 1.0 - 1.0 / (1.0 + self.k_future)

    def check(self, p: RewardParams) -> None:
        if self.delta > p.eps_r:
            raise ValueError(f"delta {self.delta} exceeds eps_r {p.eps_r}")


@dataclass(frozen=True)
class MinibatchSpec:
    base_size: int = 256

    def __post_init__(self):
        if int(self.base_size) < 1:
            raise ValueError("base_size must be positive")


@dataclass
class Minibatch:
    obs: np.ndarray
    actions: np.ndarray
    next_obs: np.ndarray
    goals: np.ndarray
    rewards: np.ndarray
    next_achieved: np.ndarray
    relabeled: np.ndarray
    centers: np.ndarray
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.rewards.shape[0])


class ReplayBuffer:
    """FIFO store of whole trajectories, bounded by a transition budget.

    Storage is a ring of ``capacity // horizon`` trajectory slots, each padded
    to ``horizon`` steps.  Eviction drops the oldest trajectory first.
    """

    def __init__(self, capacity: int, horizon: int, state_dim: int, check_rewards: Optional[float] = None):
        if horizon < 1 or capacity < horizon:
            raise ValueError("capacity must hold at least one full-horizon trajectory")
        self.capacity = int(capacity)
        self.horizon = int(horizon)
        self.state_dim = int(state_dim)
        self.check_rewards = check_rewards
        self.n_slots = self.capacity // self.horizon
        n, h = self.n_slots, self.horizon
        self.states = np.zeros((n, h + 1, state_dim))
        self.actions = np.zeros((n, h, mdp.ACTION_DIM))
        self.achieved = np.zeros((n, h + 1, mdp.GOAL_DIM))
        self.goals = np.zeros((n, mdp.GOAL_DIM))
        self.rewards = np.zeros((n, h))
        self.lengths = np.zeros(n, dtype=np.int64)
        self.n_inserted = 0  # trajectories ever stored

    @property
    def n_trajectories(self) -> int:
        return min(self.n_inserted, self.n_slots)

    @property
    def size(self) -> int:
        """Number of stored transitions."""
        return int(self.lengths.sum())

    def __len__(self) -> int:
        return self.size

    def _check(self, t: Trajectory) -> None:
        if t.states.shape[1] != self.state_dim:
            raise ValueError(f"state dimension {t.states.shape[1]} != buffer's {self.state_dim}")
        t.validate(self.horizon, self.check_rewards)

    def store(self, ts: Iterable[Trajectory]) -> None:
        ts = list(ts)
        for t in ts:
            self._check(t)
        for t in ts:
            slot = self.n_inserted % self.n_slots
            h = t.horizon
            self.states[slot, : h + 1] = t.states
            self.actions[slot, :h] = t.actions
            self.achieved[slot, : h + 1] = t.achieved
            self.goals[slot] = t.goal
            self.rewards[slot, :h] = t.rewards
            self.lengths[slot] = h
            self.n_inserted += 1

    def oldest_slot(self) -> int:
        return 0 if self.n_inserted <= self.n_slots else self.n_inserted % self.n_slots

    def trajectories(self) -> list[Trajectory]:
        """Stored trajectories, oldest first."""
        n = self.n_trajectories
        order = [(self.oldest_slot() + k) % self.n_slots for k in range(n)]
        out = []
        for slot in order:
            h = int(self.lengths[slot])
            out.append(
                Trajectory(
                    goal=self.goals[slot].copy(),
                    states=self.states[slot, : h + 1].copy(),
                    actions=self.actions[slot, :h].copy(),
                    rewards=self.rewards[slot, :h].copy(),
                    achieved=self.achieved[slot, : h + 1].copy(),
                )
            )
        return out

    def sample_indices(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Uniform transitions: returns (slot, 0-based step) index arrays."""
        filled = self.n_trajectories
        if filled == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        lengths = self.lengths[:filled]
        flat = rng.integers(0, int(lengths.sum()), size=n)
        ends = np.cumsum(lengths)
        slots = np.searchsorted(ends, flat, side="right")
        steps = flat - (ends[slots] - lengths[slots])
        return slots, steps


def sample_future_goal(t: Trajectory, i: int, rng: np.random.Generator) -> Optional[np.ndarray]:
    """Achieved goal of a state observed after transition ``i`` (1-based); None at the end."""
    h = t.horizon
    if not 1 <= i <= h:
        raise ValueError(f"step index {i} outside 1..{h}")
    if i == h:
        return None
    j = int(rng.integers(i + 1, h + 1))
    return t.achieved[j].copy()


def ger_sample_goals(centers, delta: float, ball_dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from balls of radius ``delta`` around each centre.

    For ``ball_dim == 2`` only x and y are perturbed.  ``delta == 0`` returns
    the centres unchanged and draws nothing from ``rng``.
    """
    centers = np.array(centers, dtype=float)
    if delta == 0.0:
        return centers
    flat = centers.reshape(-1, 3)
    n = flat.shape[0]
    direction = rng.standard_normal((n, ball_dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = delta * rng.random(n) ** (1.0 / ball_dim)
    out = flat.copy()
    out[:, :ball_dim] += direction * radius[:, None]
    return out.reshape(centers.shape)


def ger_sample_goal(center, cfg: GERConfig, rng: np.random.Generator) -> np.ndarray:
    return ger_sample_goals(np.asarray(center, dtype=float)[None], cfg.delta, cfg.ball_dim, rng)[0]


def _future_indices(steps, lengths, u):
    """Achieved-goal row of a uniformly chosen later state, or -1 if none."""
    count = lengths - steps - 1
    j = steps + 2 + np.floor(u * np.maximum(count, 1)).astype(np.int64)
    return np.where(count > 0, j, -1)


def _gather(buf: ReplayBuffer, slots, steps):
    return (
        buf.states[slots, steps],
        buf.actions[slots, steps],
        buf.states[slots, steps + 1],
        buf.achieved[slots, steps + 1],
    )


def her_minibatch(buf: ReplayBuffer, batch_size: int, k_future: int, p: RewardParams, rng: np.random.Generator) -> Minibatch:
    """Standard future-strategy hindsight batch (the reference HER sampler)."""
    slots, steps = buf.sample_indices(batch_size, rng)
    obs, act, nxt, ag_next = _gather(buf, slots, steps)
    goals = buf.goals[slots].copy()
    want = rng.random(batch_size) < 1.0 - 1.0 / (1.0 + k_future)
    fut = _future_indices(steps, buf.lengths[slots], rng.random(batch_size))
    relabel = want & (fut >= 0)
    goals[relabel] = buf.achieved[slots[relabel], fut[relabel]]
    rewards = mdp.sparse_reward(ag_next, goals, p.eps_r)
    return Minibatch(obs, act, nxt, goals, rewards, ag_next, relabel, goals.copy(), {"relabeled": int(relabel.sum())})


def assemble_minibatch(
    buf: ReplayBuffer,
    spec: MinibatchSpec,
    ger: GERConfig,
    p: RewardParams,
    rng: np.random.Generator,
) -> Minibatch:
    """Sample ``base_size`` transitions and emit each of them ``n_ger`` times.

    Every copy independently keeps the stored goal with probability
    ``1 / (1 + k_future)`` and is otherwise relabeled with the achieved goal
    of a later state of the same trajectory.  Copy 0 uses that hindsight goal
    as is; copies ``1 .. n_ger - 1`` replace it with a uniform sample from the
    ball of radius ``delta`` around it.  With ``n_ger == 1`` this is exactly
    the HER sampler, draw for draw.  All rewards are recomputed against the
    final goals.
    """
    ger.check(p)
    n = spec.base_size
    slots, steps = buf.sample_indices(n, rng)
    obs, act, nxt, ag_next = _gather(buf, slots, steps)
    lengths = buf.lengths[slots]
    stored_goals = buf.goals[slots]

    goals, centers, relabeled = [], [], []
    n_perturbed = 0
    for copy in range(ger.n_ger):
        g = stored_goals.copy()
        want = rng.random(n) < ger.relabel_prob
        fut = _future_indices(steps, lengths, rng.random(n))
        mask = want & (fut >= 0)
        center = g.copy()
        center[mask] = buf.achieved[slots[mask], fut[mask]]
        g = center.copy()
        if copy > 0 and ger.delta > 0 and mask.any():
            g[mask] = ger_sample_goals(center[mask], ger.delta, ger.ball_dim, rng)
            n_perturbed += int(mask.sum())
        goals.append(g)
        centers.append(center)
        relabeled.append(mask)

    goals = np.concatenate(goals)
    ag_rep = np.tile(ag_next, (ger.n_ger, 1))
    relabeled = np.concatenate(relabeled)
    return Minibatch(
        obs=np.tile(obs, (ger.n_ger, 1)),
        actions=np.tile(act, (ger.n_ger, 1)),
        next_obs=np.tile(nxt, (ger.n_ger, 1)),
        goals=goals,
        rewards=mdp.sparse_reward(ag_rep, goals, p.eps_r),
        next_achieved=ag_rep,
        relabeled=relabeled,
        centers=np.concatenate(centers),
        stats={
            "size": n * ger.n_ger,
            "relabeled": int(relabeled.sum()),
            "ger_perturbed": n_perturbed,
        },
    )


def ball_mean_distance(delta: float, dim: int) -> float:
    """Expected distance to the centre of a uniform sample in a ``dim``-ball."""
    return dim / (dim + 1.0) * delta


def transitions_to_arrays(trajs: Iterable[Trajectory]) -> tuple[np.ndarray, np.ndarray]:
    """Stack all states and achieved goals (used for normaliser updates)."""
    trajs = list(trajs)
    if not trajs:
        return np.zeros((0, 0)), np.zeros((0, 3))
    return np.concatenate([t.states for t in trajs]), np.concatenate([t.achieved for t in trajs])
