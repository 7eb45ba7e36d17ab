import os

import numpy as np
import pandas as pd
import pytest

from race_env.env import EpisodeConfig, RaceEnv
from td3.agent import TD3Agent, TD3Config
from td3.networks import NetworkSpec
from td3.training import (
    EVALUATION_COLUMNS,
    METRICS_COLUMNS,
    ActorPolicy,
    LineFollowerPolicy,
    ZeroPolicy,
    evaluate,
    run_episode,
    train,
)
from td3.checkpoint import load_checkpoint
from utils.errors import RuntimeFault
from utils.rng import SeededRNG

HIDDEN = (16, 16)
SMALL = dict(
    batch_size=32,
    buffer_size=2000,
    warmup_steps=100,
    max_iterations=300,
    eval_every=150,
    eval_episodes=1,
    checkpoint_every=150,
)


def env_for(track, params, table=None, mode="none", **episode):
    return RaceEnv(track, params, table, EpisodeConfig(mode=mode, **episode))


def run_training(track, params, out_dir=None, seed=3, table=None, mode="none", episode=None, **changes):
    env = env_for(track, params, table, mode, max_steps=100, seed=seed, **(episode or {}))
    eval_env = env_for(track, params, table, mode, max_steps=50, seed=seed)
    config = TD3Config(**{**SMALL, **changes})
    rng = SeededRNG(seed)
    agent = TD3Agent(NetworkSpec(env.observation_dim, hidden=HIDDEN), config, rng)
    return train(env, agent, out_dir=out_dir, eval_env=eval_env, rng=rng, progress=False)


class TestEvaluation:
    def test_zero_policy_episode(self, oval, params):
        env = env_for(oval, params, max_steps=50)
        result = run_episode(ZeroPolicy(), env, 5.0)
        assert not result["success"]
        assert result["termination"] == "time_limit"
        assert result["steps"] == 50
        assert result["flying_lap"] is None
        assert result["reward"] > 0.0

    def test_report(self, oval, params):
        env = env_for(oval, params, max_steps=20)
        report = evaluate(ZeroPolicy(), env, episodes=3, speed=4.0)
        assert report.success_rate == 0.0
        assert report.best_flying_lap is None
        assert report.violations == 0
        assert set(report.as_dict()) >= {"success_rate", "mean_reward", "best_flying_lap", "violations"}

    def test_random_start_speeds_are_reproducible(self, oval, params):
        env = env_for(oval, params, max_steps=5, v_init_min=2.0, v_init_max=12.0)
        first = evaluate(ZeroPolicy(), env, 4, rng=np.random.default_rng(1))
        second = evaluate(ZeroPolicy(), env, 4, rng=np.random.default_rng(1))
        speeds = [e["start_speed"] for e in first.episodes]
        assert speeds == [e["start_speed"] for e in second.episodes]
        assert all(2.0 <= v <= 12.0 for v in speeds)

    def test_line_follower_stays_on_the_oval(self, oval, params):
        env = env_for(oval, params, max_steps=1500)
        result = run_episode(LineFollowerPolicy(params, env.config), env, 10.0)
        assert result["termination"] == "time_limit"
        assert result["violations"] == 0

    @pytest.mark.slow
    def test_line_follower_flying_lap_on_the_oval(self, oval, params):
        env = env_for(oval, params, max_steps=16000)
        result = run_episode(LineFollowerPolicy(params, env.config, target_speed=10.0), env, 10.0)
        assert result["success"]
        assert result["flying_lap"] == pytest.approx(71.4, rel=0.1)

    @pytest.mark.slow
    def test_two_laps_around_a_circle(self, circle, params):
        env = env_for(circle, params, max_steps=6000)
        result = run_episode(LineFollowerPolicy(params, env.config, target_speed=8.0), env, 8.0)
        assert result["success"]
        assert result["laps"] == 2
        assert len(result["lap_times"]) == 2


class TestTrain:
    def test_writes_outputs(self, tmp_path, oval, params):
        result = run_training(oval, params, str(tmp_path))
        assert result.iterations == 300
        for name in ("checkpoint.td3c", "metrics.csv", "evaluations.csv"):
            assert os.path.exists(tmp_path / name)

        metrics = pd.read_csv(tmp_path / "metrics.csv")
        assert list(metrics.columns) == METRICS_COLUMNS
        assert len(metrics) >= 2
        assert metrics["violations_cum"].is_monotonic_increasing

        evaluations = pd.read_csv(tmp_path / "evaluations.csv")
        assert list(evaluations.columns) == EVALUATION_COLUMNS
        assert evaluations["iteration"].tolist() == [150, 300]

        agent, extra = load_checkpoint(str(tmp_path / "checkpoint.td3c"),
                                       spec=NetworkSpec(29, hidden=(16, 16)))
        assert extra["iteration"] == 300
        assert set(extra["rng"]) == {"explore", "replay"}
        np.testing.assert_array_equal(agent.actor.params[0], result.agent.actor.params[0])

    def test_same_seed_same_run(self, oval, params):
        a = run_training(oval, params, max_iterations=200, eval_every=0)
        b = run_training(oval, params, max_iterations=200, eval_every=0)
        pd.testing.assert_frame_equal(a.metrics, b.metrics)
        np.testing.assert_array_equal(a.agent.critic_1.params[0], b.agent.critic_1.params[0])

    def test_same_seed_same_files(self, tmp_path, oval, params):
        run_training(oval, params, str(tmp_path / "a"))
        run_training(oval, params, str(tmp_path / "b"))
        for name in ("metrics.csv", "evaluations.csv", "checkpoint.td3c"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_action_mapped_training_has_no_violations(self, oval, params, small_table):
        result = run_training(oval, params, table=small_table, mode="am", episode={"v_init_max": 10.0},
                              max_iterations=250, eval_every=0, warmup_steps=150)
        assert result.violations == 0

    def test_fault_leaves_an_abort_checkpoint(self, tmp_path, oval, params):
        class FaultyEnv(RaceEnv):
            def step(self, action):
                if self.steps == 20:
                    raise RuntimeFault("simulated divergence")
                return super().step(action)

        env = FaultyEnv(oval, params, None, EpisodeConfig(mode="none", max_steps=100))
        agent = TD3Agent(NetworkSpec(29, hidden=(16, 16)), TD3Config(**SMALL), SeededRNG(1))
        with pytest.raises(RuntimeFault):
            train(env, agent, out_dir=str(tmp_path), progress=False)
        assert os.path.exists(tmp_path / "abort.td3c")


def test_actor_policy_matches_agent(oval, params):
    agent = TD3Agent(NetworkSpec(29, hidden=(8, 8)), TD3Config(), SeededRNG(0))
    obs = env_for(oval, params).reset_at_finish(5.0)
    np.testing.assert_array_equal(ActorPolicy(agent.actor)(obs), agent.act(obs))
