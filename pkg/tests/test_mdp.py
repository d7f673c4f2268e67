import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_trajectory
from iter_replay import mdp
from iter_replay.envs import make_env_config


def test_state_vector_round_trip():
    v = np.arange(mdp.OBSTACLE_DIM, dtype=float)
    s = mdp.State.from_vector(v)
    assert s.obstacle is not None
    assert np.array_equal(s.to_vector(), v)
    s = mdp.State.from_vector(v[: mdp.BASE_DIM])
    assert s.obstacle is None
    assert np.array_equal(s.to_vector(), v[: mdp.BASE_DIM])
    with pytest.raises(ValueError):
        mdp.State.from_vector(np.zeros(7))


def test_action_round_trip():
    a = mdp.Action.from_vector([0.1, 0.2, 0.3, 0.04])
    assert np.array_equal(a.to_vector(), [0.1, 0.2, 0.3, 0.04])


@settings(max_examples=200, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.001, 0.5))
def test_sparse_reward_threshold(dx, dy, eps):
    r = mdp.sparse_reward([dx, dy, 0.0], [0.0, 0.0, 0.0], eps)
    assert r == (0.0 if np.hypot(dx, dy) <= eps else -1.0)


def test_reward_on_boundary_counts_as_success():
    assert mdp.sparse_reward([0.05, 0.0, 0.0], [0.0, 0.0, 0.0], 0.05) == 0.0


def test_reward_params_validation():
    with pytest.raises(ValueError):
        mdp.RewardParams(eps_r=0.0)
    with pytest.raises(ValueError):
        mdp.RewardParams(gamma=1.5)


def test_achieved_goal_keys():
    s = np.arange(mdp.BASE_DIM, dtype=float)
    assert np.array_equal(mdp.achieved_goal(s), s[8:11])
    assert np.array_equal(mdp.achieved_goal(s, "gripper"), s[0:3])


def test_trajectory_return_and_success():
    cfg = make_env_config("push", horizon=5)
    t = random_trajectory(cfg, np.random.default_rng(0))
    p = mdp.RewardParams(eps_r=0.05, gamma=0.5)
    t.rewards = np.array([-1.0, -1.0, 0.0, -1.0, 0.0])
    assert mdp.trajectory_return(t, p) == pytest.approx(-1 - 0.5 - 0.125)
    t2 = mdp.make_trajectory(t.achieved[-1], t.states, t.actions, 0.05)
    assert mdp.is_successful(t2, p)
    lo, hi = mdp.discounted_return_bounds(0.98)
    assert lo == pytest.approx(-50.0) and hi == 0.0


def test_trajectory_validation():
    cfg = make_env_config("push", horizon=5)
    t = random_trajectory(cfg, np.random.default_rng(0))
    t.validate(max_horizon=5, eps_r=cfg.eps_r)
    with pytest.raises(ValueError):
        t.validate(max_horizon=4)
    bad = mdp.Trajectory(t.goal, t.states, t.actions, t.rewards[:-1], t.achieved)
    with pytest.raises(ValueError):
        bad.validate()
    bad = mdp.Trajectory(t.goal, t.states, t.actions, t.rewards.copy(), t.achieved)
    bad.rewards[0] = 0.0 if bad.rewards[0] == -1.0 else -1.0
    with pytest.raises(ValueError):
        bad.validate(eps_r=cfg.eps_r)
    bad = mdp.Trajectory(t.goal * np.nan, t.states, t.actions, t.rewards, t.achieved)
    with pytest.raises(ValueError):
        bad.validate()


@pytest.mark.parametrize("task", ["push", "push_obstacle", "pick_place_3d"])
def test_trajectory_serialisation_round_trip(task):
    cfg = make_env_config(task, horizon=7)
    rng = np.random.default_rng(1)
    trajs = [random_trajectory(cfg, rng) for _ in range(3)]
    text = mdp.dumps_trajectories(trajs)
    back = mdp.loads_trajectories(text)
    assert len(back) == 3
    for a, b in zip(trajs, back):
        for name in ("goal", "states", "actions", "rewards", "achieved"):
            assert np.array_equal(getattr(a, name), getattr(b, name))
    buf = io.StringIO()
    mdp.dump_trajectories(back, buf)
    assert buf.getvalue() == text


def test_serialisation_rejects_unknown_version():
    with pytest.raises(ValueError):
        mdp.loads_trajectories("#traj v9 h=1 state_dim=23\n")
    with pytest.raises(ValueError):
        mdp.loads_trajectories("hello\n")
