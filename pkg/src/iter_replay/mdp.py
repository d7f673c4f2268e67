"""Multi-goal MDP types: state layout, sparse reward, trajectories.

States travel through the library as flat vectors so that whole
trajectories can be reflected, stored and batched with numpy.  The
:class:`State` dataclass is the structured view of one such vector.

Flat state layout (obstacle slots only present for obstacle tasks)::

    0:3   gripper position          3:6   gripper linear velocity
    6     finger distance           7     finger relative velocity
    8:11  object position           11:14 object orientation (Cardano)
    14:17 object linear velocity    17:20 object angular rate (Euler triple)
    20:23 object minus gripper      23:26 obstacle position
    26:29 obstacle orientation
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

GRIP_POS = slice(0, 3)
GRIP_VEL = slice(3, 6)
FINGER_DIST = 6
FINGER_VEL = 7
OBJ_POS = slice(8, 11)
OBJ_ORIENT = slice(11, 14)
OBJ_VEL = slice(14, 17)
OBJ_ANG_VEL = slice(17, 20)
REL_POS = slice(20, 23)
OBS_POS = slice(23, 26)
OBS_ORIENT = slice(26, 29)

BASE_DIM = 23
OBSTACLE_DIM = 29
ACTION_DIM = 4
GOAL_DIM = 3

FORMAT_VERSION = 1


def state_dim(with_obstacle: bool) -> int:
    return OBSTACLE_DIM if with_obstacle else BASE_DIM


@dataclass
class GripperState:
    pos: np.ndarray
    lin_vel: np.ndarray
    finger_dist: float = 0.0
    finger_rel_vel: float = 0.0


@dataclass
class ObjectState:
    pos: np.ndarray
    orient: np.ndarray
    lin_vel: np.ndarray
    ang_vel: np.ndarray


@dataclass
class ObstaclePose:
    pos: np.ndarray
    orient: np.ndarray


@dataclass
class State:
    gripper: GripperState
    object: ObjectState
    rel_pos: np.ndarray
    obstacle: Optional[ObstaclePose] = None

    def to_vector(self) -> np.ndarray:
        v = np.zeros(state_dim(self.obstacle is not None))
        v[GRIP_POS] = self.gripper.pos
        v[GRIP_VEL] = self.gripper.lin_vel
        v[FINGER_DIST] = self.gripper.finger_dist
        v[FINGER_VEL] = self.gripper.finger_rel_vel
        v[OBJ_POS] = self.object.pos
        v[OBJ_ORIENT] = self.object.orient
        v[OBJ_VEL] = self.object.lin_vel
        v[OBJ_ANG_VEL] = self.object.ang_vel
        v[REL_POS] = self.rel_pos
        if self.obstacle is not None:
            v[OBS_POS] = self.obstacle.pos
            v[OBS_ORIENT] = self.obstacle.orient
        return v

    @classmethod
    def from_vector(cls, v) -> "State":
        v = np.asarray(v, dtype=float)
        if v.shape not in ((BASE_DIM,), (OBSTACLE_DIM,)):
            raise ValueError(f"state vector must have length {BASE_DIM} or {OBSTACLE_DIM}")
        obstacle = None
        if v.shape[0] == OBSTACLE_DIM:
            obstacle = ObstaclePose(v[OBS_POS].copy(), v[OBS_ORIENT].copy())
        return cls(
            gripper=GripperState(
                v[GRIP_POS].copy(), v[GRIP_VEL].copy(), float(v[FINGER_DIST]), float(v[FINGER_VEL])
            ),
            object=ObjectState(
                v[OBJ_POS].copy(), v[OBJ_ORIENT].copy(), v[OBJ_VEL].copy(), v[OBJ_ANG_VEL].copy()
            ),
            rel_pos=v[REL_POS].copy(),
            obstacle=obstacle,
        )


@dataclass
class Action:
    target_pos: np.ndarray
    grip_dist: float = 0.0

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.target_pos, dtype=float), [self.grip_dist]])

    @classmethod
    def from_vector(cls, v) -> "Action":
        v = np.asarray(v, dtype=float)
        return cls(v[:3].copy(), float(v[3]))


@dataclass(frozen=True)
class RewardParams:
    """Sparse reward threshold, discount and the (unused) return threshold.

    ``r_min`` is kept for completeness only.  With rewards in ``{-1, 0}`` a
    return above zero cannot happen, so success is decided from the final
    achieved goal instead (see :func:`is_successful`).
    """

    eps_r: float = 0.05
    gamma: float = 0.98
    r_min: float = 0.0

    def __post_init__(self):
        if not self.eps_r > 0:
            raise ValueError("eps_r must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")


def achieved_goal(s, goal_key: str = "object") -> np.ndarray:
    """Goal quantity realised by a state: the object position, or the gripper for reach."""
    v = s.to_vector() if isinstance(s, State) else np.asarray(s, dtype=float)
    sl = GRIP_POS if goal_key == "gripper" else OBJ_POS
    return v[..., sl].copy()


def goal_distance(achieved, goal) -> np.ndarray:
    return np.linalg.norm(np.asarray(achieved, float) - np.asarray(goal, float), axis=-1)


def sparse_reward(achieved, goal, eps_r: float) -> np.ndarray:
    """Vectorised ``1[d <= eps] - 1`` on achieved/desired goal arrays."""
    return (goal_distance(achieved, goal) <= eps_r).astype(float) - 1.0


def reward(s_next, g, p: RewardParams, goal_key: str = "object") -> float:
    return float(sparse_reward(achieved_goal(s_next, goal_key), g, p.eps_r))


@dataclass
class Trajectory:
    """Goal plus the state/action/reward sequence of one episode.

    ``states`` has ``h + 1`` rows (``s_0 .. s_h``); ``actions`` and ``rewards``
    have ``h`` rows, with ``rewards[i]`` earned on reaching ``states[i + 1]``.
    ``achieved`` caches the achieved goal of every state.
    """

    goal: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    achieved: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return int(self.actions.shape[0])

    def __len__(self) -> int:
        return self.horizon

    def validate(self, max_horizon: Optional[int] = None, eps_r: Optional[float] = None) -> None:
        h = self.horizon
        if h < 1:
            raise ValueError("trajectory must contain at least one step")
        if max_horizon is not None and h > max_horizon:
            raise ValueError(f"trajectory length {h} exceeds horizon {max_horizon}")
        if self.states.shape[0] != h + 1 or self.achieved.shape[0] != h + 1:
            raise ValueError("states/achieved must have h + 1 rows")
        if self.rewards.shape != (h,):
            raise ValueError("rewards must have h entries")
        for name in ("goal", "states", "actions", "rewards", "achieved"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite values in {name}")
        if eps_r is not None:
            expected = sparse_reward(self.achieved[1:], self.goal, eps_r)
            if not np.array_equal(expected, self.rewards):
                raise ValueError("rewards inconsistent with achieved goals")


def make_trajectory(goal, states, actions, eps_r: float, goal_key: str = "object", meta=None) -> Trajectory:
    states = np.asarray(states, dtype=float)
    ag = achieved_goal(states, goal_key)
    goal = np.asarray(goal, dtype=float)
    return Trajectory(
        goal=goal,
        states=states,
        actions=np.asarray(actions, dtype=float),
        rewards=sparse_reward(ag[1:], goal, eps_r),
        achieved=ag,
        meta=dict(meta or {}),
    )


def trajectory_return(t: Trajectory, p: RewardParams) -> float:
    """Discounted return ``sum_i gamma**(i-1) r_i``."""
    disc = p.gamma ** np.arange(t.horizon)
    return float(np.dot(disc, t.rewards))


def is_successful(t: Trajectory, p: RewardParams) -> bool:
    """True iff the final achieved goal lies within ``eps_r`` of the goal."""
    return bool(goal_distance(t.achieved[-1], t.goal) <= p.eps_r)


# -- flat record format ---------------------------------------------------
#
# One header line per trajectory:
#   "#traj v1 h=<h> state_dim=<D>"
# then one record for s_0 and one per step, whitespace separated:
#   "g <goal x3> s <s_0 xD> ag <achieved_0 x3>"
#   "a <action x4> r <reward> s <s_i xD> ag <achieved_i x3>"
# Floats are written with repr() so a dump/load round trip is exact.


def _fmt(xs: Iterable[float]) -> str:
    return " ".join(repr(float(x)) for x in xs)


def dump_trajectories(trajs: Iterable[Trajectory], fh) -> None:
    for t in trajs:
        fh.write(f"#traj v{FORMAT_VERSION} h={t.horizon} state_dim={t.states.shape[1]}\n")
        fh.write(f"g {_fmt(t.goal)} s {_fmt(t.states[0])} ag {_fmt(t.achieved[0])}\n")
        for i in range(t.horizon):
            fh.write(
                f"a {_fmt(t.actions[i])} r {float(t.rewards[i])!r} s {_fmt(t.states[i + 1])} "
                f"ag {_fmt(t.achieved[i + 1])}\n"
            )


def dumps_trajectories(trajs: Iterable[Trajectory]) -> str:
    buf = io.StringIO()
    dump_trajectories(trajs, buf)
    return buf.getvalue()


def _floats(tokens):
    return [float(x) for x in tokens]


def load_trajectories(fh) -> list[Trajectory]:
    lines = [ln.strip() for ln in fh if ln.strip()]
    out: list[Trajectory] = []
    i = 0
    while i < len(lines):
        head = lines[i].split()
        if head[0] != "#traj":
            raise ValueError(f"expected trajectory header, got {lines[i]!r}")
        if head[1] != f"v{FORMAT_VERSION}":
            raise ValueError(f"unsupported trajectory format {head[1]}")
        kv = dict(tok.split("=") for tok in head[2:])
        h, dim = int(kv["h"]), int(kv["state_dim"])
        first = lines[i + 1].split()
        goal = _floats(first[1:4])
        states = [_floats(first[5 : 5 + dim])]
        achieved = [_floats(first[6 + dim : 9 + dim])]
        actions, rewards = [], []
        for rec in lines[i + 2 : i + 2 + h]:
            tok = rec.split()
            actions.append(_floats(tok[1:5]))
            rewards.append(float(tok[6]))
            states.append(_floats(tok[8 : 8 + dim]))
            achieved.append(_floats(tok[9 + dim : 12 + dim]))
        out.append(
            Trajectory(
                goal=np.array(goal),
                states=np.array(states),
                actions=np.array(actions),
                rewards=np.array(rewards),
                achieved=np.array(achieved),
            )
        )
        i += 2 + h
    return out


def loads_trajectories(text: str) -> list[Trajectory]:
    return load_trajectories(io.StringIO(text))


def discounted_return_bounds(gamma: float) -> tuple[float, float]:
    """Range of attainable returns under the sparse reward."""
    if gamma >= 1.0:
        return -math.inf, 0.0
    return -1.0 / (1.0 - gamma), 0.0
