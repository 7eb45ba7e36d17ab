"""
Training Module
The TD3 training loop on the race environment, evaluation episodes from the
finish line and the policies they run.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from tqdm import tqdm

from race_env.env import EnvConfig
from utils.atomic import atomic_write
from utils.errors import RuntimeFault
from utils.rng import SeededRNG

from .checkpoint import save_checkpoint
from .replay import ReplayBuffer

METRICS_COLUMNS = [
    "iteration", "episode", "reward", "loss_c1", "loss_c2", "violations_cum", "lap_time", "success",
]
EVALUATION_COLUMNS = [
    "iteration", "success_rate", "mean_reward", "best_flying_lap", "violations",
]
SUCCESS_LAPS = 2


class ActorPolicy:
    """Noise-free actor output."""

    def __init__(self, actor):
        self.actor = actor

    def __call__(self, obs):
        return self.actor.forward(obs)[0]


class ZeroPolicy:
    def __call__(self, obs):
        return np.zeros(2)


class LineFollowerPolicy:
    """
    Proportional centerline follower working on the observation vector.

    Steers with pure pursuit toward the first forward-observation point and
    holds a target speed with a proportional throttle/brake command.
    """

    def __init__(self, params, config=None, target_speed=10.0, k_speed=0.5, k_steer=5.0):
        self.params = params
        self.config = config or EnvConfig()
        self.target_speed = target_speed
        self.k_speed = k_speed
        self.k_steer = k_steer

    def __call__(self, obs):
        cfg, params = self.config, self.params
        v = obs[0] * cfg.v_norm
        delta = obs[2] * params.delta_max
        x, y = obs[5] * cfg.fo_norm, obs[6] * cfg.fo_norm
        wanted = math.atan(2.0 * params.wheelbase * y / max(x * x + y * y, 1e-9))
        wanted = min(max(wanted, -params.delta_max), params.delta_max)
        u_x = self.k_speed * (self.target_speed - v)
        u_y = self.k_steer * (wanted - delta) / params.delta_rate_max
        return np.clip(np.array([u_x, u_y]), -1.0, 1.0)


@dataclass
class EvaluationReport:
    episodes: list = field(default_factory=list)

    @property
    def success_rate(self):
        if not self.episodes:
            return 0.0
        return sum(e["success"] for e in self.episodes) / len(self.episodes)

    @property
    def mean_reward(self):
        return float(np.mean([e["reward"] for e in self.episodes])) if self.episodes else 0.0

    @property
    def best_flying_lap(self):
        laps = [e["flying_lap"] for e in self.episodes if e["flying_lap"] is not None]
        return min(laps) if laps else None

    @property
    def violations(self):
        return sum(e["violations"] for e in self.episodes)

    def as_dict(self):
        return {
            "episodes": self.episodes,
            "success_rate": self.success_rate,
            "mean_reward": self.mean_reward,
            "best_flying_lap": self.best_flying_lap,
            "violations": self.violations,
        }


def run_episode(policy, env, speed):
    """One evaluation episode from the finish line; stops after two laps."""
    obs = env.reset_at_finish(speed)
    total, done, info = 0.0, False, {"termination": None}
    while not done and env.laps < SUCCESS_LAPS:
        obs, reward, done, info = env.step(policy(obs))
        total += reward
    success = env.laps >= SUCCESS_LAPS
    return {
        "start_speed": float(speed),
        "laps": int(env.laps),
        "lap_times": [float(t) for t in env.lap_times],
        "flying_lap": float(env.lap_times[1]) if len(env.lap_times) >= SUCCESS_LAPS else None,
        "success": bool(success),
        "reward": float(total),
        "violations": int(env.violations),
        "steps": int(env.steps),
        "termination": None if success else info["termination"],
    }


def evaluate(policy, env, episodes=1, speed=None, rng=None):
    """
    Run noise-free evaluation episodes from the finish line.

    Parameters:
    -----------
    policy : callable
        observation -> action
    env : RaceEnv
    episodes : int
    speed : float, optional
        Start speed; when omitted each episode draws one from the env's
        initial-speed range with `rng`
    rng : np.random.Generator, optional

    Returns:
    --------
    EvaluationReport
    """
    rng = rng if rng is not None else SeededRNG(env.episode.seed).stream("evaluate")
    report = EvaluationReport()
    for _ in range(episodes):
        v0 = speed if speed is not None else rng.uniform(env.episode.v_init_min, env.episode.v_init_max)
        report.episodes.append(run_episode(policy, env, v0))
    return report


@dataclass
class TrainingResult:
    agent: object
    metrics: pd.DataFrame
    evaluations: pd.DataFrame
    violations: int
    iterations: int
    checkpoint: str = None


def _write_frame(df, path):
    with atomic_write(path, "w") as handle:
        df.to_csv(handle, index=False, lineterminator="\n")


def train(env, agent, out_dir=None, eval_env=None, rng=None, progress=True, eval_speed=None):
    """
    Train a TD3 agent on an environment.

    Per iteration: act with clipped Gaussian exploration noise (uniform
    random actions during warm-up), step the environment, store the
    transition and update the agent from a uniform minibatch. Episodes are
    restarted on termination. Every eval_every iterations the noise-free
    policy is evaluated and every checkpoint_every iterations a checkpoint
    and the metrics are written.

    Returns:
    --------
    TrainingResult
    """
    cfg = agent.config
    rng = rng or SeededRNG(env.episode.seed)
    explore = rng.stream("explore")
    sampler = rng.stream("replay")
    buffer = ReplayBuffer(env.observation_dim, env.action_dim, max(1, min(cfg.buffer_size, cfg.max_iterations)))
    rows, eval_rows = [], []
    paths = {}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        paths = {
            "checkpoint": os.path.join(out_dir, "checkpoint.td3c"),
            "metrics": os.path.join(out_dir, "metrics.csv"),
            "evaluations": os.path.join(out_dir, "evaluations.csv"),
        }

    def flush(iteration):
        if not paths:
            return
        save_checkpoint(agent, paths["checkpoint"], iteration, {"explore": explore, "replay": sampler})
        _write_frame(pd.DataFrame(rows, columns=METRICS_COLUMNS), paths["metrics"])
        _write_frame(pd.DataFrame(eval_rows, columns=EVALUATION_COLUMNS), paths["evaluations"])

    obs = env.reset()
    episode, episode_reward, violations_cum = 0, 0.0, 0
    losses = (math.nan, math.nan)
    iteration = 0
    bar = tqdm(total=cfg.max_iterations, desc="Training", unit="it", disable=not progress)
    try:
        for iteration in range(1, cfg.max_iterations + 1):
            if iteration <= cfg.warmup_steps:
                action = explore.uniform(-1.0, 1.0, size=env.action_dim)
            else:
                noise = explore.normal(0.0, cfg.exploration_noise, size=env.action_dim)
                action = np.clip(agent.act(obs) + noise, -1.0, 1.0)

            next_obs, reward, done, info = env.step(action)
            buffer.add(obs, action, reward, next_obs, done and not info["truncated"])
            obs = next_obs
            episode_reward += reward
            if info["friction_violation"]:
                violations_cum += 1

            if iteration > cfg.warmup_steps and len(buffer) >= cfg.batch_size:
                result = agent.update(buffer.sample(cfg.batch_size, sampler))
                losses = (result["loss_c1"], result["loss_c2"])

            if done:
                lap_time = env.lap_times[-1] if env.lap_times else math.nan
                rows.append([iteration, episode, episode_reward, losses[0], losses[1],
                             violations_cum, lap_time, env.laps >= SUCCESS_LAPS])
                episode += 1
                episode_reward = 0.0
                obs = env.reset()

            if eval_env is not None and cfg.eval_every and iteration % cfg.eval_every == 0:
                report = evaluate(ActorPolicy(agent.actor), eval_env, cfg.eval_episodes, eval_speed,
                                  rng=SeededRNG(rng.seed).stream("evaluate"))
                eval_rows.append([iteration, report.success_rate, report.mean_reward,
                                  report.best_flying_lap, report.violations])
                bar.write(f"  iteration {iteration}: success rate {report.success_rate:.2f}, "
                          f"mean reward {report.mean_reward:.1f}, violations {violations_cum}")

            if cfg.checkpoint_every and iteration % cfg.checkpoint_every == 0:
                flush(iteration)
            bar.update(1)
    except RuntimeFault:
        if paths:
            save_checkpoint(agent, os.path.join(out_dir, "abort.td3c"), iteration)
        raise
    finally:
        bar.close()

    flush(cfg.max_iterations)
    return TrainingResult(
        agent=agent,
        metrics=pd.DataFrame(rows, columns=METRICS_COLUMNS),
        evaluations=pd.DataFrame(eval_rows, columns=EVALUATION_COLUMNS),
        violations=violations_cum,
        iterations=cfg.max_iterations,
        checkpoint=paths.get("checkpoint"),
    )
