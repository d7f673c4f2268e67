import math

import numpy as np
import pytest

from conftest import ALL_TASKS, OPEN_WORKSPACE, random_action, random_scene, random_trajectory
from iter_replay import mdp
from iter_replay.envs import make_env_config, rollout_actions, step
from iter_replay.geometry import reflect_plane_pos
from iter_replay.mdp import RewardParams
from iter_replay.symmetry import (
    DecomposableSymmetry,
    KERConfig,
    Workspace,
    apply_symmetry,
    is_feasible_in_workspace,
    ker_generate,
    reflect_actions,
    reflect_states,
    sample_planes,
)

P = RewardParams(eps_r=0.05)


@pytest.mark.parametrize("task", ALL_TASKS)
def test_step_commutes_with_reflection(task):
    cfg = make_env_config(task)
    rng = np.random.default_rng(ALL_TASKS.index(task))
    worst = 0.0
    for _ in range(200):
        s, _ = random_scene(cfg, rng)
        a = random_action(cfg, s, rng)
        theta = rng.uniform(-math.pi, math.pi)
        lhs = step(reflect_states(theta, s), reflect_actions(theta, a), cfg)
        rhs = reflect_states(theta, step(s, a, cfg))
        worst = max(worst, np.abs(lhs - rhs).max())
    assert worst <= 1e-9


@pytest.mark.parametrize("task", ALL_TASKS)
def test_reward_preserved_under_reflection(task):
    cfg = make_env_config(task)
    p = RewardParams(eps_r=cfg.eps_r)
    rng = np.random.default_rng(7)
    for _ in range(20):
        t = random_trajectory(cfg, rng, horizon=15)
        # put the goal on the trajectory sometimes so that successes occur
        if rng.random() < 0.5:
            t = mdp.make_trajectory(t.achieved[-1] + 0.01, t.states, t.actions, cfg.eps_r, cfg.goal_key)
        img = apply_symmetry(rng.uniform(-1, 1), t, p)
        assert np.array_equal(img.rewards, t.rewards)
        assert mdp.is_successful(img, p) == mdp.is_successful(t, p)


def test_reflected_trajectory_replays_open_loop():
    cfg = make_env_config("push_obstacle")
    rng = np.random.default_rng(3)
    t = random_trajectory(cfg, rng, horizon=30)
    for img in ker_generate(t, KERConfig(n_ker=3), OPEN_WORKSPACE, P, rng=rng):
        replay = rollout_actions(cfg, img.states[0], img.goal, img.actions)
        assert np.abs(replay.states - img.states).max() <= 1e-6


def test_symmetry_records_planes():
    cfg = make_env_config("push")
    t = random_trajectory(cfg, np.random.default_rng(0), horizon=5)
    img = apply_symmetry(0.0, apply_symmetry(0.2, t, P), P)
    assert img.meta["planes"] == [0.2, 0.0]


def test_fingers_unchanged_and_positions_mirrored():
    s = np.zeros(mdp.BASE_DIM)
    s[0:3] = (0.5, 0.2, 0.1)
    s[6], s[7] = 0.04, 0.3
    out = reflect_states(0.0, s)
    assert np.array_equal(out[0:3], [0.5, -0.2, 0.1])
    assert out[6] == 0.04 and out[7] == 0.3


def test_obstacle_pose_reflected():
    s = np.zeros(mdp.OBSTACLE_DIM)
    s[mdp.OBS_POS] = (0.6, 0.1, 0.03)
    s[mdp.OBS_ORIENT] = (0.0, 0.0, 0.4)
    out = reflect_states(0.0, s)
    assert np.allclose(out[mdp.OBS_POS], [0.6, -0.1, 0.03])
    assert np.allclose(out[mdp.OBS_ORIENT], [0.0, 0.0, -0.4])


def test_decomposable_symmetry_matches_components():
    cfg = make_env_config("push")
    t = random_trajectory(cfg, np.random.default_rng(1), horizon=6)
    sym = DecomposableSymmetry(theta=0.3)
    img = sym(t, P)
    assert np.array_equal(img.states, sym.state(t.states))
    assert np.array_equal(img.actions, sym.action(t.actions))
    assert np.array_equal(img.goal, sym.goal(t.goal))
    ident = DecomposableSymmetry(theta=None)
    assert ident(t, P) is t
    assert DecomposableSymmetry.from_dict(sym.to_dict()) == sym


def test_decomposable_symmetry_on_dataclasses():
    s = mdp.State.from_vector(np.arange(mdp.BASE_DIM, dtype=float) / 10)
    a = mdp.Action.from_vector([0.5, 0.1, 0.03, 0.02])
    sym = DecomposableSymmetry(theta=0.0)
    assert np.allclose(sym.state(s).to_vector(), reflect_states(0.0, s.to_vector()))
    assert np.allclose(sym.action(a).to_vector(), [0.5, -0.1, 0.03, 0.02])


def test_offset_plane_reflection():
    sym = DecomposableSymmetry(theta=0.0, offset=(0.0, 0.2, 0.0))
    assert np.allclose(sym.goal([0.5, 0.3, 0.0]), [0.5, 0.1, 0.0])


# -- KER counting ------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 8])
def test_ker_count_all_feasible(n):
    cfg = make_env_config("push")
    t = random_trajectory(cfg, np.random.default_rng(n), horizon=10)
    out = ker_generate(t, KERConfig(n_ker=n, theta_max=math.pi / 4), OPEN_WORKSPACE, P, rng=np.random.default_rng(0))
    assert len(out) == 2 * n - 1


def test_ker_single_symmetry_is_xoz_mirror():
    cfg = make_env_config("push")
    t = random_trajectory(cfg, np.random.default_rng(2), horizon=10)
    (img,) = ker_generate(t, KERConfig(n_ker=1), OPEN_WORKSPACE, P)
    assert np.array_equal(img.states, reflect_states(0.0, t.states))


def _straight_line(y0, n=6):
    """Gripper/object sliding along x at lateral offset ``y0`` (no dynamics needed)."""
    states = np.zeros((n + 1, mdp.BASE_DIM))
    xs = np.linspace(0.5, 0.6, n + 1)
    states[:, 0], states[:, 1] = xs, y0
    states[:, 8], states[:, 9] = xs + 0.05, y0
    states[:, 20] = 0.05
    actions = np.column_stack([xs[1:], np.full(n, y0), np.zeros(n), np.zeros(n)])
    return mdp.make_trajectory([0.7, y0, 0.0], states, actions, 0.05)


def test_ker_edge_hugging_counts():
    # y bound 0.2; a trajectory at y = 0.15 hugging the edge
    w = Workspace(grip_low=(0.0, -0.2, -1.0), grip_high=(1.0, 0.2, 1.0))
    t = _straight_line(0.15)
    assert is_feasible_in_workspace(t, w)
    # hand enumeration: reflecting across theta moves the point at polar angle
    # phi to 2 theta - phi; tiny theta stays inside, large theta leaves the band
    keep = 0.01
    drop = math.pi / 4
    for th in (keep, drop):
        img_y = reflect_plane_pos(th, t.states[:, 0:3])[:, 1]
        assert (np.abs(img_y) <= 0.2).all() == (th == keep)
    cfg = KERConfig(n_ker=3)
    out = ker_generate(t, cfg, w, P, thetas=[keep, drop])
    # stage 1 = {t, keep-image}; stage 2 mirrors both -> 1 + 2 new trajectories
    assert len(out) == 3
    out = ker_generate(t, cfg, w, P, thetas=[drop, drop])
    assert len(out) == 1  # only the xoz mirror of t
    out = ker_generate(t, cfg, w, P, thetas=[keep, keep * 2])
    assert len(out) == 5


def test_ker_outputs_exclude_original_and_are_mirrors():
    cfg = make_env_config("push")
    t = random_trajectory(cfg, np.random.default_rng(5), horizon=8)
    out = ker_generate(t, KERConfig(n_ker=2), OPEN_WORKSPACE, P, thetas=[0.2])
    assert len(out) == 3
    assert not any(np.array_equal(o.states, t.states) for o in out)
    assert np.allclose(out[2].states, reflect_states(0.0, out[0].states))


def test_ker_rejects_bad_configs():
    with pytest.raises(ValueError):
        KERConfig(n_ker=0)
    with pytest.raises(ValueError):
        KERConfig(theta_max=0.0)
    cfg = make_env_config("push")
    t = random_trajectory(cfg, np.random.default_rng(0), horizon=3)
    with pytest.raises(ValueError):
        ker_generate(t, KERConfig(n_ker=3), OPEN_WORKSPACE, P, thetas=[0.1])


def test_sample_planes_range():
    cfg = KERConfig(n_ker=2000, theta_max=0.3)
    th = sample_planes(cfg, np.random.default_rng(0))
    assert th.shape == (1999,)
    assert np.all(th > 0.0) and np.all(th <= 0.3)


def test_workspace_validation_and_roundtrip():
    with pytest.raises(ValueError):
        Workspace(grip_low=(0.0, -0.1, 0.0), grip_high=(1.0, 0.2, 1.0))
    with pytest.raises(ValueError):
        Workspace(grip_low=(1.0, -0.1, 0.0), grip_high=(0.0, 0.1, 1.0))
    w = Workspace(grip_low=(0.0, -0.1, 0.0), grip_high=(1.0, 0.1, 1.0))
    assert Workspace.from_dict(w.to_dict()) == w
