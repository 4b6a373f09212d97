import math

import numpy as np
import pytest

import mrrl


SMALL = {
    "scenario": 1,
    "desk_scale": True,
    "seeds": [2],
    "sac": {
        "hidden": [16, 16],
        "batch_size": 16,
        "episodes": 2,
        "steps_per_episode": 40,
        "bootstrap_episodes": 1,
        "bootstrap_sweeps": 20,
        "replay_capacity": 5000,
    },
}


def test_presets_round_trip():
    for scenario in (1, 2, 3, 4):
        cfg = mrrl.preset(scenario, desk_scale=True)
        assert cfg["scenario"] == scenario
        assert mrrl.resolve(cfg) == cfg


def test_invalid_config_raises():
    with pytest.raises(ValueError):
        mrrl.resolve({"scenario": 9})
    with pytest.raises(ValueError):
        mrrl.resolve({"sac": {"gamma": 2.0}})


def test_content_hash():
    assert mrrl.content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"


def test_closest_approach_perpendicular():
    d, closing = mrrl.closest_approach([0.0, 0.0], [1.0, 0.0], [5.0, 3.0], [0.0, 0.0])
    assert closing
    assert math.isclose(d, 3.0, rel_tol=1e-12)


def test_environment_step():
    env = mrrl.Environment(SMALL)
    obs = env.reset(0)
    start = env.time
    assert obs.shape == (mrrl.OBSERVATION_WIDTH,)
    total = 0.0
    for _ in range(40):
        obs, reward, done, diverged = env.step(np.zeros(2))
        assert not diverged
        assert reward <= 0.0
        total += reward
    assert done
    assert env.time - start == pytest.approx(4.0)
    assert np.all(np.isfinite(env.plant_pose))


def test_verify_passes():
    checks = mrrl.verify(3)
    assert checks
    assert all(c["passed"] for c in checks), [c for c in checks if not c["passed"]]


def test_train_and_evaluate(tmp_path):
    finals = mrrl.train(SMALL, tmp_path / "train")
    assert len(finals) == 1
    metrics = mrrl.evaluate(SMALL, tmp_path / "eval", checkpoint=finals[0])
    assert metrics["steps"] == 2000
    assert not metrics["diverged"]
    assert (tmp_path / "eval" / "trajectory.csv").exists()
    with pytest.raises(mrrl.CheckpointError):
        mrrl.evaluate(SMALL, tmp_path / "bad", checkpoint=tmp_path / "eval" / "trajectory.csv")
