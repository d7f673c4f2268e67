"""Shared scene generators for the test suite."""

import math

import numpy as np
import pytest

from iter_replay import mdp
from iter_replay.envs import make_env_config, reset, rollout_actions
from iter_replay.symmetry import Workspace

ALL_TASKS = ("reach", "push", "slide", "push_obstacle", "pick_place_3d")

OPEN_WORKSPACE = Workspace()


def random_scene(cfg, rng):
    """A reset state perturbed so that contacts, grasps and glides all occur."""
    s, g = reset(cfg, rng)
    s = s.copy()
    if cfg.task != "reach":
        # put the gripper close to the object half of the time
        if rng.random() < 0.5:
            ang = rng.uniform(-math.pi, math.pi)
            r = rng.uniform(0.0, 0.08)
            s[0:2] = s[8:10] + r * np.array([math.cos(ang), math.sin(ang)])
        else:
            s[0:2] += rng.normal(0.0, 0.05, 2)
    if cfg.task == "slide":
        s[mdp.OBJ_VEL][:2] = rng.normal(0.0, 0.3, 2)
        s[14:16] = rng.normal(0.0, 0.3, 2)
    if cfg.task == "pick_place_3d":
        s[2] = rng.uniform(cfg.table_z, 0.2)
        s[6] = rng.choice([2 * cfg.obj_radius, cfg.finger_max, rng.uniform(0, cfg.finger_max)])
        if rng.random() < 0.5:
            s[8:11] = s[0:3] + rng.normal(0.0, 0.01, 3)
    # orientation entries ride along; give them non-trivial values
    s[mdp.OBJ_ORIENT] = rng.uniform(-1.0, 1.0, 3)
    s[mdp.OBJ_ANG_VEL] = rng.uniform(-1.0, 1.0, 3)
    s[mdp.REL_POS] = s[mdp.OBJ_POS] - s[mdp.GRIP_POS]
    return s, g


def random_action(cfg, s, rng, scale=0.08):
    a = np.empty(mdp.ACTION_DIM)
    a[:3] = s[:3] + rng.uniform(-scale, scale, 3)
    a[3] = rng.uniform(0.0, cfg.finger_max)
    return a


def random_trajectory(cfg, rng, horizon=None):
    h = cfg.horizon if horizon is None else horizon
    s0, g = random_scene(cfg, rng)
    acts = []
    s = s0
    from iter_replay.envs import step

    for _ in range(h):
        a = random_action(cfg, s, rng)
        acts.append(a)
        s = step(s, a, cfg)
    return rollout_actions(cfg, s0, g, np.array(acts))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=ALL_TASKS)
def task_cfg(request):
    return make_env_config(request.param)


# -- acceptance report -------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
