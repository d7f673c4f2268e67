"""Decomposable reflection symmetries and kaleidoscope trajectory generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import mdp
from .geometry import reflect_plane_eul, reflect_plane_pos
from .mdp import Action, RewardParams, State, Trajectory


def reflect_states(theta: float, states, offset=None) -> np.ndarray:
    """Reflect flat state vectors (shape ``(D,)`` or ``(N, D)``) across a plane."""
    s = np.array(states, dtype=float)
    out = s.copy()
    for sl in (mdp.GRIP_POS, mdp.OBJ_POS):
        out[..., sl] = reflect_plane_pos(theta, s[..., sl], offset)
    for sl in (mdp.GRIP_VEL, mdp.OBJ_VEL, mdp.REL_POS):
        out[..., sl] = reflect_plane_pos(theta, s[..., sl])
    for sl in (mdp.OBJ_ORIENT, mdp.OBJ_ANG_VEL):
        out[..., sl] = reflect_plane_eul(theta, s[..., sl])
    if s.shape[-1] == mdp.OBSTACLE_DIM:
        out[..., mdp.OBS_POS] = reflect_plane_pos(theta, s[..., mdp.OBS_POS], offset)
        out[..., mdp.OBS_ORIENT] = reflect_plane_eul(theta, s[..., mdp.OBS_ORIENT])
    # finger distance and finger velocity are scalars and stay put
    return out


def reflect_actions(theta: float, actions, offset=None) -> np.ndarray:
    a = np.array(actions, dtype=float)
    out = a.copy()
    out[..., :3] = reflect_plane_pos(theta, a[..., :3], offset)
    return out


def reflect_state(theta: float, s: State, offset=None) -> State:
    return State.from_vector(reflect_states(theta, s.to_vector(), offset))


def reflect_action(theta: float, a: Action, offset=None) -> Action:
    return Action.from_vector(reflect_actions(theta, a.to_vector(), offset))


def reflect_goal(theta: float, g, offset=None) -> np.ndarray:
    return reflect_plane_pos(theta, g, offset)


def apply_symmetry(theta: float, t: Trajectory, p: RewardParams, offset=None) -> Trajectory:
    """Map every state, action and the goal through the plane reflection.

    Rewards are recomputed against the reflected goal rather than copied.
    """
    goal = reflect_goal(theta, t.goal, offset)
    achieved = reflect_plane_pos(theta, t.achieved, offset)
    planes = list(t.meta.get("planes", ())) + [float(theta)]
    return Trajectory(
        goal=goal,
        states=reflect_states(theta, t.states, offset),
        actions=reflect_actions(theta, t.actions, offset),
        rewards=mdp.sparse_reward(achieved[1:], goal, p.eps_r),
        achieved=achieved,
        meta={**t.meta, "planes": planes},
    )


@dataclass(frozen=True)
class DecomposableSymmetry:
    """State/action/goal maps of one plane reflection; ``theta=None`` is the identity."""

    theta: Optional[float] = 0.0
    offset: Optional[tuple] = None

    def state(self, s):
        if self.theta is None:
            return s
        if isinstance(s, State):
            return reflect_state(self.theta, s, self.offset)
        return reflect_states(self.theta, s, self.offset)

    def action(self, a):
        if self.theta is None:
            return a
        if isinstance(a, Action):
            return reflect_action(self.theta, a, self.offset)
        return reflect_actions(self.theta, a, self.offset)

    def goal(self, g):
        if self.theta is None:
            return np.asarray(g, dtype=float)
        return reflect_goal(self.theta, g, self.offset)

    def __call__(self, t: Trajectory, p: RewardParams) -> Trajectory:
        if self.theta is None:
            return t
        return apply_symmetry(self.theta, t, p, self.offset)

    def to_dict(self) -> dict:
        return {
            "kind": "identity" if self.theta is None else "plane_reflection",
            "theta": self.theta,
            "offset": None if self.offset is None else list(self.offset),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecomposableSymmetry":
        off = d.get("offset")
        return cls(theta=d.get("theta"), offset=None if off is None else tuple(off))


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned bounds for gripper, object and goal positions.

    Bounds must be mirror symmetric in y so that the ``xoz`` reflection maps
    feasible trajectories onto feasible ones.  Infinite bounds switch a check off.
    """

    grip_low: tuple = (-math.inf, -math.inf, -math.inf)
    grip_high: tuple = (math.inf, math.inf, math.inf)
    obj_low: tuple = (-math.inf, -math.inf, -math.inf)
    obj_high: tuple = (math.inf, math.inf, math.inf)
    goal_low: tuple = (-math.inf, -math.inf, -math.inf)
    goal_high: tuple = (math.inf, math.inf, math.inf)

    def __post_init__(self):
        for lo, hi in (
            (self.grip_low, self.grip_high),
            (self.obj_low, self.obj_high),
            (self.goal_low, self.goal_high),
        ):
            lo, hi = np.asarray(lo, float), np.asarray(hi, float)
            if lo.shape != (3,) or hi.shape != (3,):
                raise ValueError("workspace bounds must be 3-vectors")
            if np.any(lo >= hi):
                raise ValueError("workspace bounds must satisfy low < high")
            if lo[1] != -hi[1]:
                raise ValueError("workspace must be symmetric in y (y_min == -y_max)")

    def contains(self, pts, which: str) -> bool:
        lo = np.asarray(getattr(self, f"{which}_low"), float)
        hi = np.asarray(getattr(self, f"{which}_high"), float)
        pts = np.asarray(pts, float)
        return bool(np.all((pts >= lo) & (pts <= hi)))

    def to_dict(self) -> dict:
        return {k: list(getattr(self, k)) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "Workspace":
        return cls(**{k: tuple(float(x) for x in v) for k, v in d.items()})


def is_feasible_in_workspace(t: Trajectory, w: Workspace) -> bool:
    return (
        w.contains(t.states[:, mdp.GRIP_POS], "grip")
        and w.contains(t.states[:, mdp.OBJ_POS], "obj")
        and w.contains(t.goal, "goal")
    )


@dataclass(frozen=True)
class KERConfig:
    n_ker: int = 1
    theta_max: float = math.pi / 4
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.n_ker) < 1:
            raise ValueError("n_ker must be >= 1")
        if not 0.0 < self.theta_max <= math.pi:
            raise ValueError("theta_max must lie in (0, pi]")


def sample_planes(cfg: KERConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n_ker - 1`` angles uniformly from ``(0, theta_max]``."""
    return cfg.theta_max - rng.uniform(0.0, cfg.theta_max, size=cfg.n_ker - 1)


def ker_generate(
    t: Trajectory,
    cfg: KERConfig,
    w: Workspace,
    p: RewardParams,
    rng: Optional[np.random.Generator] = None,
    thetas: Optional[Sequence[float]] = None,
) -> list[Trajectory]:
    """Kaleidoscope augmentation of one observed trajectory.

    Stage one reflects ``t`` across ``n_ker - 1`` rotated planes and keeps the
    images that stay inside ``w``.  Stage two mirrors ``t`` and every kept
    image across ``xoz``.  The new trajectories (``t`` itself excluded) are
    returned, at most ``2 * n_ker - 1`` of them.

    ``thetas`` overrides the sampled plane angles; ``rng`` defaults to a
    generator seeded from ``cfg.rng_seed``.
    """
    if int(cfg.n_ker) < 1:
        raise ValueError("n_ker must be >= 1")
    if thetas is None:
        rng = np.random.default_rng(cfg.rng_seed) if rng is None else rng
        thetas = sample_planes(cfg, rng)
    elif len(thetas) != cfg.n_ker - 1:
        raise ValueError(f"expected {cfg.n_ker - 1} plane angles, got {len(thetas)}")

    stage1 = [t]
    for theta in thetas:
        img = apply_symmetry(float(theta), t, p)
        if is_feasible_in_workspace(img, w):
            stage1.append(img)
    out = stage1[1:] + [apply_symmetry(0.0, tr, p) for tr in stage1]
    # only an already infeasible source can yield infeasible mirrors here
    return [tr for tr in out if is_feasible_in_workspace(tr, w)]


def compose_reflections_on_positions(theta1: float, theta2: float, v) -> np.ndarray:
    """Apply the ``theta1`` reflection then the ``theta2`` one to positions."""
    return reflect_plane_pos(theta2, reflect_plane_pos(theta1, v))
