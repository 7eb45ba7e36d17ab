"""
RaceAM - command-line front end
Builds boundary tables, trains and evaluates TD3 race-driving policies with
action mapping (or the friction-penalty baseline), records rollouts and
exports boundary slices for plotting.

    python app.py build-table --grid 64,64,72 --out runs
    python app.py train --mode am --table runs/table.ambt --iters 300000
    python app.py evaluate --checkpoint runs/checkpoint.td3c --episodes 20
"""

import argparse
import json
import os
import sys
import warnings

import numpy as np

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from action_map.boundary import DESK_COUNTS, FULL_COUNTS, GridSpec
from action_map.table import boundary_slice, build_table, load_table, save_table, symmetry_residual, table_stats
from race_env.env import EnvConfig, EpisodeConfig, RaceEnv
from race_env.trajectory import save_trajectory
from td3.agent import TD3Agent, TD3Config
from td3.checkpoint import load_checkpoint
from td3.networks import NetworkSpec
from td3.training import ActorPolicy, LineFollowerPolicy, ZeroPolicy, evaluate, train
from track.canonical import CANONICAL_TRACKS, canonical_track
from track.io import load_track
from utils.atomic import write_text_atomic
from utils.config import load_run_config, parse_grid
from utils.errors import RaceError, UsageError
from utils.rng import SeededRNG
from vehicle.dynamics import DEFAULT_HORIZON_STEPS
from vehicle.params import VehicleParams


class RaceArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(UsageError.exit_code, f"{self.prog}: error: {message}\n")


def load_params(config):
    params = VehicleParams.from_file(config.require("vehicle")) if config.vehicle else VehicleParams()
    if config.mu_max is not None:
        params = params.with_mu_max(config.mu_max)
    return params


def load_track_arg(name):
    if name in CANONICAL_TRACKS:
        return canonical_track(name)
    return load_track(name)


def load_table_for(config, params):
    if config.mode != "am":
        return None
    return load_table(config.require("table"), params=params)


def make_env(config, params, table, horizon=None, max_steps=None, record=False):
    episode = EpisodeConfig(mode=config.mode, seed=config.seed,
                            **({"max_steps": max_steps} if max_steps is not None else {}))
    # a table fixes the friction check it was sampled with
    if table is not None:
        env_config = EnvConfig(dt=table.dt, horizon_steps=table.horizon_steps if horizon is None else horizon)
    else:
        env_config = EnvConfig(horizon_steps=DEFAULT_HORIZON_STEPS if horizon is None else horizon)
    return RaceEnv(load_track_arg(config.track), params, table, episode, env_config, record=record)


def make_policy(args, config, env, params):
    if args.policy == "zero":
        return ZeroPolicy()
    if args.policy == "line":
        return LineFollowerPolicy(params, env.config, target_speed=args.line_speed)
    agent, _ = load_checkpoint(config.require("checkpoint"), spec=NetworkSpec(env.observation_dim))
    return ActorPolicy(agent.actor)


def write_report(path, report):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    write_text_atomic(path, text)
    print(text, end="")
    print(f"✓ Saved to: {path}")


def cmd_build_table(args, config):
    params = load_params(config)
    counts = FULL_COUNTS if args.full_grid else (config.grid or DESK_COUNTS)
    horizon = DEFAULT_HORIZON_STEPS if args.horizon is None else args.horizon
    if horizon < 1:
        raise UsageError(f"--horizon must be >= 1, got {horizon}")
    grid = GridSpec.for_vehicle(params, counts)
    path = config.table or os.path.join(config.out, "table.ambt")

    print(f"Sampling boundary on a {'x'.join(map(str, grid.counts))} grid "
          f"(mu_max = {params.mu_max}, horizon = {horizon} steps, workers = {args.workers})")
    table, elapsed = build_table(params, grid, horizon_steps=horizon, workers=args.workers)
    save_table(table, path)
    print(f"✓ Saved to: {path}")
    # the parameters behind the table hash, reusable as --vehicle
    vehicle_path = path + ".vehicle"
    params.to_file(vehicle_path)
    print(f"✓ Saved to: {vehicle_path}")

    write_report(path + ".json", {
        "table": path,
        "vehicle": vehicle_path,
        "build_seconds": round(elapsed, 3),
        "grid": list(grid.counts),
        "v_range": [grid.v_min, grid.v_max],
        "delta_range": [grid.delta_min, grid.delta_max],
        "mu_max": table.mu_max,
        "horizon_steps": table.horizon_steps,
        "dt": table.dt,
        "rho": table_stats(table),
        "symmetry_residual": symmetry_residual(table),
    })
    return 0


def cmd_train(args, config):
    params = load_params(config)
    table = load_table_for(config, params)
    env = make_env(config, params, table, horizon=args.horizon)
    eval_env = make_env(config, params, table, horizon=args.horizon)
    td3_config = TD3Config(
        max_iterations=config.iters,
        eval_every=config.eval_every,
        checkpoint_every=config.eval_every,
        eval_episodes=args.episodes,
        warmup_steps=args.warmup,
    )
    rng = SeededRNG(config.seed)
    agent = TD3Agent(NetworkSpec(env.observation_dim), td3_config, rng)

    print(f"Training in {config.mode} mode on {env.track.name} for {config.iters} iterations")
    result = train(env, agent, out_dir=config.out, eval_env=eval_env, rng=rng, eval_speed=args.speed)
    print(f"✓ Saved to: {result.checkpoint}")

    metrics = result.metrics
    write_report(os.path.join(config.out, "train_report.json"), {
        "mode": config.mode,
        "track": env.track.name,
        "iterations": result.iterations,
        "episodes": int(len(metrics)),
        "violations_cum": int(result.violations),
        "mean_episode_reward": float(metrics["reward"].mean()) if len(metrics) else None,
        "checkpoint": result.checkpoint,
    })
    return 0


def cmd_evaluate(args, config):
    params = load_params(config)
    table = load_table_for(config, params)
    env = make_env(config, params, table, horizon=args.horizon, max_steps=args.max_steps)
    policy = make_policy(args, config, env, params)

    print(f"Evaluating {args.policy} policy for {args.episodes} episode(s) on {env.track.name}")
    report = evaluate(policy, env, args.episodes, args.speed, rng=SeededRNG(config.seed).stream("evaluate"))
    result = report.as_dict()
    result.update({"mode": config.mode, "track": env.track.name, "policy": args.policy})
    write_report(os.path.join(config.out, "evaluation.json"), result)
    return 0


def cmd_rollout(args, config):
    params = load_params(config)
    table = load_table_for(config, params)
    env = make_env(config, params, table, horizon=args.horizon, max_steps=args.max_steps, record=True)
    policy = make_policy(args, config, env, params)

    obs = env.reset_at_finish(args.speed) if args.speed is not None else env.reset()
    done = False
    while not done:
        obs, _, done, info = env.step(policy(obs))
    path = os.path.join(config.out, "trajectory.csv")
    save_trajectory(env.trajectory, path)
    print(f"Rollout finished after {env.steps} steps ({info['termination']}), "
          f"{env.laps} lap(s), {env.violations} friction violation(s)")
    print(f"✓ Saved to: {path}")
    return 0


def cmd_export_boundary_slice(args, config):
    params = load_params(config)
    table = load_table(config.require("table"), params=params)
    if args.delta_count < 0:
        raise UsageError("--delta-count must be >= 0")
    deltas = np.radians(np.linspace(args.delta_min, args.delta_max, args.delta_count))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        df = boundary_slice(table, args.v, deltas, conservative=args.conservative)
    for w in caught:
        print(f"Warning: {w.message}")

    path = os.path.join(config.out, "boundary_slice.csv")
    write_text_atomic(path, df.to_csv(index=False, lineterminator="\n"))
    print(f"{len(df)} rows at v = {args.v} m/s")
    print(f"✓ Saved to: {path}")
    return 0


COMMANDS = {
    "build-table": cmd_build_table,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "rollout": cmd_rollout,
    "export-boundary-slice": cmd_export_boundary_slice,
}


def build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="dotenv file with RACEAM_* settings")
    shared.add_argument("--vehicle", help="vehicle parameter file (key = value)")
    shared.add_argument("--track", help=f"track CSV file or one of: {', '.join(CANONICAL_TRACKS)}")
    shared.add_argument("--table", help="boundary table file")
    shared.add_argument("--checkpoint", help="TD3 checkpoint file")
    shared.add_argument("--seed", type=int, help="root random seed")
    shared.add_argument("--out", help="output directory")
    shared.add_argument("--mode", choices=["am", "penalty", "none"], help="constraint handling")
    shared.add_argument("--mu-max", dest="mu_max", type=float, help="friction limit override")
    shared.add_argument("--grid", help="table grid counts Nv,Nd,Nt")
    shared.add_argument("--iters", type=int, help="training iterations")
    shared.add_argument("--horizon", type=int,
                        help=f"friction-check horizon in steps (default {DEFAULT_HORIZON_STEPS}, or the table's own)")

    parser = RaceArgumentParser(
        prog="raceam",
        description="Race-driving policies with TD3 and friction-constrained action mapping",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("build-table", parents=[shared], help="sample the boundary table")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--full-grid", action="store_true", help="use the 200x200x200 grid")

    p = sub.add_parser("train", parents=[shared], help="train a TD3 policy")
    p.add_argument("--eval-every", dest="eval_every", type=int, help="evaluation/checkpoint interval")
    p.add_argument("--episodes", type=int, default=5, help="episodes per evaluation")
    p.add_argument("--warmup", type=int, default=5000, help="random-action warm-up steps")
    p.add_argument("--speed", type=float, help="evaluation start speed (m/s)")

    for name, help_text in (("evaluate", "evaluate a policy from the finish line"),
                            ("rollout", "record one episode as a trajectory CSV")):
        p = sub.add_parser(name, parents=[shared], help=help_text)
        p.add_argument("--policy", choices=["actor", "zero", "line"], default="actor",
                       help="checkpoint actor, zero action or centerline follower")
        p.add_argument("--line-speed", dest="line_speed", type=float, default=10.0,
                       help="target speed of the line follower (m/s)")
        p.add_argument("--speed", type=float, help="start speed on the finish line (m/s)")
        p.add_argument("--max-steps", dest="max_steps", type=int, default=10000, help="episode step budget")
        if name == "evaluate":
            p.add_argument("--episodes", type=int, default=20, help="number of episodes")

    p = sub.add_parser("export-boundary-slice", parents=[shared], help="export rho_hat at a fixed speed")
    p.add_argument("--v", type=float, default=15.4, help="speed (m/s)")
    p.add_argument("--delta-min", dest="delta_min", type=float, default=-35.0, help="smallest steering angle (deg)")
    p.add_argument("--delta-max", dest="delta_max", type=float, default=35.0, help="largest steering angle (deg)")
    p.add_argument("--delta-count", dest="delta_count", type=int, default=8, help="number of steering angles")
    p.add_argument("--conservative", action="store_true", help="use the conservative lookup")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {name: getattr(args, name, None) for name in (
        "vehicle", "track", "table", "checkpoint", "seed", "out", "mode", "mu_max", "grid", "iters", "eval_every",
    )}
    try:
        if overrides["grid"] is not None:
            overrides["grid"] = parse_grid(overrides["grid"])
        config = load_run_config(args.config, overrides)
        print("=" * 60)
        print(f"raceam {args.command}  (seed {config.seed})")
        print("=" * 60)
        return COMMANDS[args.command](args, config)
    except RaceError as e:
        print(f"✗ Error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
