import json

import numpy as np
import pytest

from iter_replay import mdp
from iter_replay.config import normalize
from iter_replay.envs import make_env_config, scripted_reach_action
from iter_replay.training import (
    CSV_COLUMNS,
    build,
    evaluate,
    evaluate_policy,
    make_agent,
    read_progress,
    run_training,
)

TINY = {
    "env": {"task": "push", "horizon": 20},
    "ker": {"n_ker": 2},
    "ger": {"n_ger": 2, "delta": 0.05},
    "agent": {"hidden": [16, 16]},
    "train": {
        "epochs": 2,
        "episodes_per_epoch": 3,
        "eval_episodes": 4,
        "rollouts_per_cycle": 2,
        "train_steps_per_cycle": 3,
        "batch_size": 32,
        "wall_clock": False,
        "dump_trajectories": True,
    },
}


def _csv_text(path):
    return (path / "progress.csv").read_text()


def test_same_seed_gives_identical_csv(tmp_path):
    run_training(TINY, seed=3, out_dir=tmp_path / "a")
    run_training(TINY, seed=3, out_dir=tmp_path / "b")
    run_training(TINY, seed=4, out_dir=tmp_path / "c")
    assert _csv_text(tmp_path / "a") == _csv_text(tmp_path / "b")
    assert _csv_text(tmp_path / "a") != _csv_text(tmp_path / "c")
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["ker_planes"] == mb["ker_planes"]


def test_csv_columns_and_accounting(tmp_path):
    recs = run_training(TINY, seed=0, out_dir=tmp_path)
    rows = read_progress(tmp_path / "progress.csv")
    assert list(rows[0]) == CSV_COLUMNS
    h = TINY["env"]["horizon"]
    per = TINY["train"]["episodes_per_epoch"]
    for i, r in enumerate(rows):
        assert int(r["epoch"]) == i
        assert int(r["env_steps"]) == (i + 1) * per * h
        assert int(r["n_stored_real"]) == int(r["env_steps"])
        # each real episode contributes at most 2 n_ker - 1 mirrored copies
        assert 0 <= int(r["n_stored_augmented"]) <= 3 * int(r["n_stored_real"])
        assert r["wall_s"] == ""
    filtered = recs[-1].ker_filtered
    assert recs[-1].n_stored_augmented + filtered * h == 3 * recs[-1].n_stored_real


def test_train_success_matches_dumped_trajectories(tmp_path):
    recs = run_training(TINY, seed=1, out_dir=tmp_path)
    with open(tmp_path / "trajectories.txt") as fh:
        trajs = mdp.load_trajectories(fh)
    per = TINY["train"]["episodes_per_epoch"]
    assert len(trajs) == per * len(recs)
    p = mdp.RewardParams(eps_r=make_env_config("push").eps_r)
    for rec in recs:
        chunk = trajs[rec.epoch * per : (rec.epoch + 1) * per]
        assert rec.train_success == pytest.approx(np.mean([mdp.is_successful(t, p) for t in chunk]))


def test_manifest_and_checkpoint(tmp_path):
    run_training(TINY, seed=2, out_dir=tmp_path)
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["status"] == "complete"
    assert m["seed"] == 2 and m["epochs_completed"] == 2
    assert m["kernel_backend"] in ("python", "cython")
    assert len(m["ker_planes"]) == 2 * 3
    assert (tmp_path / "checkpoint.npz").exists()


def test_early_stop_and_no_output_dir():
    cfg = normalize(TINY)
    cfg["train"]["success_threshold"] = 0.0
    cfg["train"]["stop_at"] = 1
    cfg["train"]["dump_trajectories"] = False
    recs = run_training(cfg, seed=0)
    assert len(recs) == 1


def test_scripted_reach_oracle_scores_one():
    env = make_env_config("reach")

    def policy(obs, goals):
        return np.array([scripted_reach_action(s, g) for s, g in zip(obs, goals)])

    assert evaluate_policy(policy, env, 50, seed=0) == 1.0


def test_untrained_policy_is_near_chance():
    c = build({"env": {"task": "push"}, "agent": {"hidden": [16, 16]}})
    agent = make_agent(c, seed=0)
    # chance = fraction of episodes where the object already starts within eps of the goal
    assert evaluate(agent, c.env, 100, seed=0) <= 0.2


def test_evaluate_rejects_zero_episodes():
    c = build({"env": {"task": "reach"}})
    with pytest.raises(ValueError):
        evaluate(make_agent(c, 0), c.env, 0)


def test_ger_delta_must_fit_inside_success_radius():
    with pytest.raises(ValueError):
        build({"env": {"task": "push"}, "ger": {"delta": 1.0}})
