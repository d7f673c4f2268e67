"""Toy multi-goal manipulation environments.

The robot base sits at the origin and the table lies in front of it along
+x.  All sampling regions are mirror symmetric in y and every physical limit
is a disc about the z axis, which keeps the dynamics equivariant under the
reflections used for augmentation.

Tasks
-----
reach          gripper must reach a 3D goal; the object is parked at the origin.
push           planar disc pushing; gripper height pinned to the table, fingers blocked.
slide          like push, but the object glides with a decaying velocity and goals
               lie beyond the gripper's reach.
push_obstacle  push with a static oriented brick that blocks gripper and object.
pick_place_3d  3D gripper with fingers; closing them around the object carries it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import mdp
from ._kernels import (
    N_PARAMS,
    P_DT,
    P_FINGER_MAX,
    P_FINGER_STEP,
    P_GLIDE,
    P_GRASP_TOL,
    P_GRIP_LIMIT_R,
    P_GRIP_R,
    P_HIT,
    P_MAX_STEP,
    P_NSUB,
    P_OBJ_LIMIT_R,
    P_OBJ_R,
    P_OBS_HL,
    P_OBS_HW,
    P_TABLE_Z,
    P_TASK,
    P_Z_HI,
    P_Z_LO,
    TASK_CODES,
    step_into,
)
from .symmetry import Workspace

TASKS = tuple(TASK_CODES)


@dataclass(frozen=True)
class EnvConfig:
    task: str = "push"
    workspace: Workspace = field(default_factory=Workspace)
    eps_r: float = 0.05
    horizon: int = 50
    dt: float = 0.04
    max_step: float = 0.025
    n_substeps: int = 5
    grip_radius: float = 0.015
    obj_radius: float = 0.03
    grip_limit_r: float = 1.0
    obj_limit_r: float = 1.4
    z_lo: float = 0.0
    z_hi: float = 0.5
    table_z: float = 0.03
    glide: float = 0.9
    hit_gain: float = 1.5
    home: tuple = (0.55, 0.0, 0.03)
    obj_low: tuple = (0.45, -0.1)
    obj_high: tuple = (0.65, 0.1)
    goal_low: tuple = (0.45, -0.1, 0.03)
    goal_high: tuple = (0.65, 0.1, 0.03)
    air_goal_prob: float = 0.0
    min_obj_home_dist: float = 0.06
    obstacle_size: tuple = (0.16, 0.05, 0.08)
    obstacle_low: tuple = (0.45, -0.1)
    obstacle_high: tuple = (0.65, 0.1)
    finger_max: float = 0.08
    finger_step: float = 0.02
    grasp_tol: float = 0.03
    fixed_goal: Optional[tuple] = None

    def __post_init__(self):
        if self.task not in TASK_CODES:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.eps_r > 0:
            raise ValueError("eps_r must be positive")
        for lo, hi in ((self.obj_low, self.obj_high), (self.obstacle_low, self.obstacle_high)):
            if lo[1] != -hi[1]:
                raise ValueError("sampling regions must be symmetric in y")
        if self.goal_low[1] != -self.goal_high[1]:
            raise ValueError("goal region must be symmetric in y")
        if self.home[1] != 0.0:
            raise ValueError("gripper home must lie on the xoz plane")

    @property
    def with_obstacle(self) -> bool:
        return self.task == "push_obstacle"

    @property
    def goal_key(self) -> str:
        return "gripper" if self.task == "reach" else "object"

    @property
    def state_dim(self) -> int:
        return mdp.state_dim(self.with_obstacle)

    @property
    def planar(self) -> bool:
        return self.task in ("push", "slide", "push_obstacle")

    def action_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Box the actor's outputs and random exploration are confined to."""
        r = self.grip_limit_r
        lo = np.array([0.0, -0.75 * r, self.z_lo, 0.0])
        hi = np.array([r, 0.75 * r, self.z_hi, self.finger_max])
        return lo, hi

    def kernel_params(self) -> np.ndarray:
        p = np.zeros(N_PARAMS)
        p[P_TASK] = TASK_CODES[self.task]
        p[P_DT] = self.dt
        p[P_MAX_STEP] = self.max_step
        p[P_NSUB] = self.n_substeps
        p[P_GRIP_R] = self.grip_radius
        p[P_OBJ_R] = self.obj_radius
        p[P_GRIP_LIMIT_R] = self.grip_limit_r
        p[P_OBJ_LIMIT_R] = self.obj_limit_r
        p[P_Z_LO] = self.z_lo
        p[P_Z_HI] = self.z_hi
        p[P_TABLE_Z] = self.table_z
        p[P_GLIDE] = self.glide
        p[P_HIT] = self.hit_gain
        p[P_OBS_HL] = self.obstacle_size[0] / 2
        p[P_OBS_HW] = self.obstacle_size[1] / 2
        p[P_FINGER_MAX] = self.finger_max
        p[P_FINGER_STEP] = self.finger_step
        p[P_GRASP_TOL] = self.grasp_tol
        return p

    def to_dict(self) -> dict:
        d = asdict(self)
        d["workspace"] = self.workspace.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        d = dict(d)
        if "workspace" in d and isinstance(d["workspace"], dict):
            d["workspace"] = Workspace.from_dict(d["workspace"])
        for k, v in list(d.items()):
            if isinstance(v, list):
                d[k] = tuple(v)
        return cls(**d)


_TABLE_WS = Workspace(
    grip_low=(0.2, -0.4, 0.0),
    grip_high=(0.95, 0.4, 0.5),
    obj_low=(0.3, -0.35, 0.0),
    obj_high=(0.9, 0.35, 0.5),
    goal_low=(0.3, -0.35, 0.0),
    goal_high=(0.9, 0.35, 0.5),
)


def make_env_config(task: str, **overrides) -> EnvConfig:
    """Preset configuration for one of the toy tasks."""
    base: dict = dict(task=task, workspace=_TABLE_WS)
    if task == "reach":
        base.update(
            goal_low=(0.35, -0.2, 0.05),
            goal_high=(0.75, 0.2, 0.35),
            home=(0.35, 0.0, 0.2),
            workspace=replace(
                _TABLE_WS, obj_low=(-1.0, -1.0, -1.0), obj_high=(1.0, 1.0, 1.0)
            ),
        )
    elif task == "slide":
        base.update(
            eps_r=0.2,
            grip_limit_r=0.8,
            goal_low=(1.0, -0.2, 0.03),
            goal_high=(1.3, 0.2, 0.03),
            obj_low=(0.45, -0.1),
            obj_high=(0.6, 0.1),
            workspace=Workspace(
                grip_low=(0.2, -0.4, 0.0),
                grip_high=(0.8, 0.4, 0.5),
                obj_low=(0.3, -0.5, 0.0),
                obj_high=(1.4, 0.5, 0.5),
                goal_low=(0.9, -0.5, 0.0),
                goal_high=(1.4, 0.5, 0.5),
            ),
        )
    elif task == "pick_place_3d":
        base.update(
            goal_low=(0.45, -0.1, 0.03),
            goal_high=(0.65, 0.1, 0.28),
            air_goal_prob=0.5,
            home=(0.55, 0.0, 0.15),
        )
    base.update(overrides)
    return EnvConfig(**base)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _brick_overlaps(p, r, center, yaw, half) -> bool:
    c, s = math.cos(yaw), math.sin(yaw)
    dx, dy = p[0] - center[0], p[1] - center[1]
    lx, ly = c * dx + s * dy, -s * dx + c * dy
    qx = min(max(lx, -half[0]), half[0])
    qy = min(max(ly, -half[1]), half[1])
    return math.hypot(lx - qx, ly - qy) < r


def reset(cfg: EnvConfig, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Sample an initial flat state and goal."""
    rng = _rng(seed)
    s = np.zeros(cfg.state_dim)
    s[mdp.GRIP_POS] = cfg.home
    if cfg.task == "pick_place_3d":
        s[mdp.FINGER_DIST] = cfg.finger_max
    half = (cfg.obstacle_size[0] / 2, cfg.obstacle_size[1] / 2)

    if cfg.with_obstacle:
        ob = rng.uniform(cfg.obstacle_low, cfg.obstacle_high)
        yaw = math.pi - rng.uniform(0.0, 2 * math.pi)
        s[mdp.OBS_POS] = (ob[0], ob[1], cfg.table_z)
        s[mdp.OBS_ORIENT] = (0.0, 0.0, yaw)

    def clear_of_brick(p, r):
        if not cfg.with_obstacle:
            return True
        return not _brick_overlaps(p, r, s[mdp.OBS_POS], s[mdp.OBS_ORIENT][2], half)

    if cfg.task == "reach":
        s[mdp.OBJ_POS] = 0.0
    else:
        while True:
            xy = rng.uniform(cfg.obj_low, cfg.obj_high)
            far = math.hypot(xy[0] - cfg.home[0], xy[1] - cfg.home[1]) >= cfg.min_obj_home_dist
            if far and clear_of_brick(xy, cfg.obj_radius):
                break
        s[mdp.OBJ_POS] = (xy[0], xy[1], cfg.table_z)
    s[mdp.REL_POS] = s[mdp.OBJ_POS] - s[mdp.GRIP_POS]

    if cfg.fixed_goal is not None:
        return s, np.asarray(cfg.fixed_goal, dtype=float)
    while True:
        goal = rng.uniform(cfg.goal_low, cfg.goal_high)
        if cfg.air_goal_prob > 0 and rng.uniform() >= cfg.air_goal_prob:
            goal[2] = cfg.table_z
        if clear_of_brick(goal, cfg.obj_radius):
            break
    return s, goal


def step(s, a, cfg: EnvConfig, params: Optional[np.ndarray] = None) -> np.ndarray:
    """Pure transition function on flat vectors."""
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    out = np.empty_like(s)
    step_into(s, a, cfg.kernel_params() if params is None else params, out)
    return out


class ToyEnv:
    """Stateful wrapper around :func:`reset` and :func:`step` with a step counter."""

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self._params = cfg.kernel_params()
        self.state: Optional[np.ndarray] = None
        self.goal: Optional[np.ndarray] = None
        self.t = 0

    def reset(self, seed=None) -> tuple[np.ndarray, np.ndarray]:
        self.state, self.goal = reset(self.cfg, seed)
        self.t = 0
        return self.state.copy(), self.goal.copy()

    def set_state(self, state, goal) -> None:
        self.state = np.array(state, dtype=float)
        self.goal = np.array(goal, dtype=float)
        self.t = 0

    def step(self, a) -> tuple[np.ndarray, float]:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        if self.t >= self.cfg.horizon:
            raise RuntimeError(f"episode horizon {self.cfg.horizon} exceeded")
        nxt = np.empty_like(self.state)
        step_into(self.state, np.asarray(a, dtype=float), self._params, nxt)
        self.state = nxt
        self.t += 1
        ag = mdp.achieved_goal(nxt, self.cfg.goal_key)
        r = float(mdp.sparse_reward(ag, self.goal, self.cfg.eps_r))
        return nxt.copy(), r

    def achieved(self) -> np.ndarray:
        return mdp.achieved_goal(self.state, self.cfg.goal_key)


def rollout_actions(cfg: EnvConfig, s0, goal, actions) -> mdp.Trajectory:
    """Replay an action sequence open loop from ``s0``."""
    params = cfg.kernel_params()
    states = [np.asarray(s0, dtype=float)]
    for a in actions:
        nxt = np.empty_like(states[-1])
        step_into(states[-1], np.asarray(a, dtype=float), params, nxt)
        states.append(nxt)
    return mdp.make_trajectory(goal, np.array(states), np.asarray(actions), cfg.eps_r, cfg.goal_key)


def scripted_reach_action(state, goal) -> np.ndarray:
    """Proportional controller for reach: aim straight at the goal."""
    return np.concatenate([np.asarray(goal, dtype=float), [0.0]])


def scripted_push_action(state, goal, cfg: EnvConfig) -> np.ndarray:
    """Hand-written pusher: line up behind the object, then push through it."""
    g = state[mdp.GRIP_POS][:2]
    o = state[mdp.OBJ_POS][:2]
    goal2 = np.asarray(goal, dtype=float)[:2]
    d = goal2 - o
    dist = np.linalg.norm(d)
    if dist < 1e-9:
        return np.array([g[0], g[1], cfg.table_z, 0.0])
    u = d / dist
    rr = cfg.grip_radius + cfg.obj_radius
    behind = o - u * (rr + 0.01)
    to_behind = behind - g
    along = np.dot(g - o, u)
    lateral = np.linalg.norm((g - o) - along * u)
    if along < -rr * 0.5 and lateral < rr * 0.5:
        tgt = o + u * min(dist, cfg.max_step)
    elif np.linalg.norm(to_behind) > 0.005:
        # go around the object when it sits between gripper and the approach point
        if along > -rr and lateral < rr + 0.02:
            perp = np.array([-u[1], u[0]])
            side = perp if np.dot(g - o, perp) >= 0 else -perp
            tgt = o + side * (rr + 0.03) - u * (rr + 0.02)
        else:
            tgt = behind
    else:
        tgt = o + u * min(dist, cfg.max_step)
    return np.array([tgt[0], tgt[1], cfg.table_z, 0.0])
