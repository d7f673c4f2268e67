import math

import numpy as np
import pytest

from conftest import ALL_TASKS, random_action, random_scene
from iter_replay import mdp
from iter_replay._kernels import _step_py, available_backends
from iter_replay.envs import (
    EnvConfig,
    ToyEnv,
    make_env_config,
    reset,
    rollout_actions,
    scripted_push_action,
    scripted_reach_action,
    step,
)


@pytest.mark.parametrize("task", ALL_TASKS)
def test_reset_samples_valid_scenes(task):
    cfg = make_env_config(task)
    rng = np.random.default_rng(0)
    for _ in range(200):
        s, g = reset(cfg, rng)
        assert s.shape == (cfg.state_dim,)
        assert cfg.workspace.contains(s[mdp.GRIP_POS], "grip")
        assert cfg.workspace.contains(g, "goal")
        assert np.allclose(s[mdp.REL_POS], s[mdp.OBJ_POS] - s[mdp.GRIP_POS])
        if task != "reach":
            assert cfg.workspace.contains(s[mdp.OBJ_POS], "obj")


def test_reset_is_seeded():
    cfg = make_env_config("push_obstacle")
    a, b = reset(cfg, 5), reset(cfg, 5)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@pytest.mark.parametrize("task", ALL_TASKS)
def test_backends_agree(task):
    backends = available_backends()
    cfg = make_env_config(task)
    p = cfg.kernel_params()
    rng = np.random.default_rng(1)
    for _ in range(300):
        s, _ = random_scene(cfg, rng)
        a = random_action(cfg, s, rng)
        ref = _step_py.step_into(s, a, p, np.zeros_like(s))
        for mod in backends.values():
            out = mod.step_into(s, a, p, np.zeros_like(s))
            assert np.allclose(out, ref, atol=1e-12, rtol=0)


@pytest.mark.parametrize("task", ALL_TASKS)
def test_step_respects_limits(task):
    cfg = make_env_config(task)
    rng = np.random.default_rng(2)
    for _ in range(300):
        s, _ = random_scene(cfg, rng)
        a = random_action(cfg, s, rng, scale=0.5)
        nxt = step(s, a, cfg)
        assert np.linalg.norm(nxt[0:3] - s[0:3]) <= cfg.max_step + 0.05  # contact push-back adds at most rr
        assert math.hypot(*nxt[0:2]) <= cfg.grip_limit_r + 1e-12
        assert cfg.z_lo <= nxt[2] <= cfg.z_hi
        assert np.allclose(nxt[mdp.REL_POS], nxt[mdp.OBJ_POS] - nxt[mdp.GRIP_POS])
        if cfg.planar:
            rr = cfg.grip_radius + cfg.obj_radius
            assert math.hypot(*(nxt[8:10] - nxt[0:2])) >= rr - 1e-9


def test_push_moves_object_along_contact_normal():
    cfg = make_env_config("push")
    s, _ = reset(cfg, 0)
    s[0:3] = (0.5, 0.0, cfg.table_z)
    s[8:11] = (0.55, 0.0, cfg.table_z)
    s[mdp.REL_POS] = s[8:11] - s[0:3]
    nxt = step(s, [0.6, 0.0, cfg.table_z, 0.0], cfg)
    assert nxt[8] > 0.55 and abs(nxt[9]) < 1e-12
    assert nxt[14] > 0.0  # object velocity recorded


def test_obstacle_blocks_gripper():
    cfg = make_env_config("push_obstacle")
    s = np.zeros(cfg.state_dim)
    s[0:3] = (0.45, 0.0, cfg.table_z)
    s[8:11] = (0.45, 0.3, cfg.table_z)
    s[mdp.OBS_POS] = (0.6, 0.0, cfg.table_z)
    s[mdp.REL_POS] = s[8:11] - s[0:3]
    for _ in range(20):
        s = step(s, [0.6, 0.0, cfg.table_z, 0.0], cfg)
    half_l = cfg.obstacle_size[0] / 2
    assert s[0] <= 0.6 - half_l - cfg.grip_radius + 1e-9


def test_slide_object_glides_and_decays():
    cfg = make_env_config("slide")
    s, _ = reset(cfg, 0)
    s[0:2] = (0.4, 0.0)
    s[8:10] = (0.7, 0.0)
    s[14:16] = (0.5, 0.0)
    s[mdp.REL_POS] = s[8:11] - s[0:3]
    nxt = step(s, [0.4, 0.0, cfg.table_z, 0.0], cfg)
    assert nxt[8] > 0.7
    assert nxt[14] == pytest.approx(0.5 * cfg.glide)


def test_pick_grasp_carries_object():
    cfg = make_env_config("pick_place_3d")
    s, _ = reset(cfg, 0)
    s[0:3] = s[8:11]
    s[6] = cfg.finger_max
    for _ in range(5):
        s = step(s, [s[0], s[1], s[2], 0.0], cfg)  # close fingers
    assert s[6] == pytest.approx(2 * cfg.obj_radius)
    for _ in range(5):
        s = step(s, [s[0], s[1], 0.2, 0.0], cfg)
    assert s[10] > cfg.table_z + 0.05
    assert np.allclose(s[8:11], s[0:3])
    for _ in range(5):
        s = step(s, [s[0], s[1], s[2], cfg.finger_max], cfg)  # release
    assert s[10] == cfg.table_z


def test_toy_env_horizon_and_reward():
    cfg = make_env_config("reach", horizon=3)
    env = ToyEnv(cfg)
    with pytest.raises(RuntimeError):
        env.step([0, 0, 0, 0])
    s, g = env.reset(0)
    for _ in range(3):
        s, r = env.step(scripted_reach_action(s, g))
        assert r in (-1.0, 0.0)
    with pytest.raises(RuntimeError):
        env.step([0, 0, 0, 0])


def test_rollout_actions_matches_step():
    cfg = make_env_config("push")
    s0, g = reset(cfg, 3)
    acts = [scripted_push_action(s0, g, cfg)] * 4
    t = rollout_actions(cfg, s0, g, acts)
    s = s0
    for i, a in enumerate(acts):
        s = step(s, a, cfg)
        assert np.array_equal(s, t.states[i + 1])


def test_scripted_controllers_solve_their_tasks():
    for task, ctrl in (("reach", lambda s, g, c: scripted_reach_action(s, g)), ("push", scripted_push_action)):
        cfg = make_env_config(task)
        p = mdp.RewardParams(eps_r=cfg.eps_r)
        wins = 0
        for seed in range(30):
            s, g = reset(cfg, seed)
            acts = []
            for _ in range(cfg.horizon):
                a = ctrl(s, g, cfg)
                acts.append(a)
                s = step(s, a, cfg)
            wins += mdp.is_successful(rollout_actions(cfg, acts and reset(cfg, seed)[0], g, acts), p)
        assert wins >= 27, task


def test_env_config_validation_and_roundtrip():
    with pytest.raises(ValueError):
        EnvConfig(task="fly")
    with pytest.raises(ValueError):
        EnvConfig(home=(0.3, 0.1, 0.0))
    with pytest.raises(ValueError):
        EnvConfig(obj_low=(0.4, -0.1), obj_high=(0.6, 0.2))
    cfg = make_env_config("push_obstacle", horizon=20)
    assert EnvConfig.from_dict(cfg.to_dict()) == cfg
