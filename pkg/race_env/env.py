"""
Race Environment Module
The race-driving MDP: a car on a track, stepped with normalized virtual
actions that are either mapped to admissible controls (action mapping), used
directly with a friction penalty, or used directly without any constraint
handling.
"""

from dataclasses import dataclass

import numpy as np

from action_map.table import map_action
from track.geometry import DEFAULT_FO_DISTANCES, forward_observation, lap_events, terminal_predicates, track_pose
from utils.errors import RuntimeFault, UsageError, ValidationError
from utils.rng import DEFAULT_SEED, SeededRNG
from vehicle.dynamics import (
    DEFAULT_DT,
    DEFAULT_HORIZON_STEPS,
    DELTA,
    OMEGA,
    VX,
    VehicleState,
    check_friction_array,
    rk4_step_array,
    tire_forces,
)

from .mdp import MODES, compute_reward, normalize_observation
from .trajectory import Trajectory


@dataclass(frozen=True)
class EpisodeConfig:
    """Episode lifecycle settings."""

    max_steps: int = 10000
    v_init_min: float = 0.0
    v_init_max: float = 30.0
    mode: str = "am"
    seed: int = DEFAULT_SEED
    penalty_terminates: bool = True
    conservative: bool = True

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValidationError(f"max_steps must be >= 1, got {self.max_steps}")
        if not (0.0 <= self.v_init_min <= self.v_init_max <= 30.0):
            raise ValidationError(
                f"initial speed range [{self.v_init_min}, {self.v_init_max}] must lie within [0, 30] m/s"
            )
        if self.mode not in MODES:
            raise ValidationError(f"constraint mode must be one of {', '.join(MODES)}, got {self.mode!r}")


@dataclass(frozen=True)
class EnvConfig:
    """Simulation and normalization constants."""

    dt: float = DEFAULT_DT
    horizon_steps: int = DEFAULT_HORIZON_STEPS
    v_norm: float = 30.0
    omega_norm: float = 3.0
    fo_norm: float = 200.0
    fo_distances: tuple = DEFAULT_FO_DISTANCES

    def __post_init__(self):
        if self.dt <= 0.0 or self.horizon_steps < 1:
            raise ValidationError("dt must be > 0 and horizon_steps >= 1")
        if min(self.v_norm, self.omega_norm, self.fo_norm) <= 0.0:
            raise ValidationError("normalization constants must be > 0")


class RaceEnv:
    """
    Single-car race environment with a gym-style reset/step interface.

    Parameters:
    -----------
    track : Track
    params : VehicleParams
    table : BoundaryTable, optional
        Required in "am" mode
    episode : EpisodeConfig
    config : EnvConfig
    record : bool
        Keep a Trajectory of the current episode
    """

    action_dim = 2

    def __init__(self, track, params, table=None, episode=None, config=None, record=False):
        self.track = track
        self.params = params
        self.table = table
        self.episode = episode or EpisodeConfig()
        self.config = config or EnvConfig()
        self.record = record
        if self.episode.mode == "am" and table is None:
            raise ValidationError("action-mapping mode needs a boundary table")
        if self.episode.mode == "am" and (table.horizon_steps, table.dt) != (self.config.horizon_steps, self.config.dt):
            raise ValidationError(
                f"boundary table was sampled with a {table.horizon_steps}-step friction check at dt = {table.dt} s, "
                f"the environment checks {self.config.horizon_steps} steps at dt = {self.config.dt} s"
            )
        self._straights = track.straight_intervals()
        self._rng = SeededRNG(self.episode.seed).stream("env")
        self._state = None
        self._pose = None
        self._done = True
        self.trajectory = None

    @property
    def observation_dim(self):
        return 5 + 2 * len(self.config.fo_distances)

    @property
    def state(self):
        return VehicleState.from_array(self._state)

    @property
    def pose(self):
        return self._pose

    @property
    def done(self):
        return self._done

    def reset(self, seed=None):
        """
        Place the car on the centerline of a random straight-part station at a
        random speed, heading along the track, with zero yaw rate and steering.
        """
        if seed is not None:
            self._rng = SeededRNG(seed).stream("env")
        if not self._straights:
            raise ValidationError(f"track {self.track.name} has no straight part to start from")
        lengths = np.array([s1 - s0 for s0, s1 in self._straights])
        pick = self._rng.uniform(0.0, lengths.sum())
        index = min(int(np.searchsorted(np.cumsum(lengths), pick, side="right")), len(lengths) - 1)
        s = self._straights[index][0] + (pick - np.cumsum(lengths)[index] + lengths[index])
        v = self._rng.uniform(self.episode.v_init_min, self.episode.v_init_max)
        return self._place(s, v)

    def reset_at_finish(self, speed=0.0):
        """Start on the finish line at the given speed (evaluation episodes)."""
        return self._place(self.track.finish_s, float(speed))

    def reset_to(self, state):
        """Start from an arbitrary car state."""
        self._start(state.as_array())
        return self.observation()

    def _place(self, s, v):
        x, y = self.track.point_at(s)
        psi = self.track.tangent_at(s)
        self._start(np.array([x, y, psi, v, 0.0, 0.0, 0.0]), hint=s)
        return self.observation()

    def _start(self, x, hint=None):
        self._state = np.asarray(x, dtype=float).copy()
        self._pose = track_pose(self.track, self._state[:2], self._state[2], hint=hint)
        self._done = False
        self.t = 0.0
        self.steps = 0
        self.laps = 0
        self.lap_times = []
        self._lap_start = 0.0
        self.violations = 0
        if self.record:
            self.trajectory = Trajectory()
            zero = np.zeros(2)
            f_xy = tire_forces(self._state, zero, self.params)["F_xy"]
            self.trajectory.record(0.0, self.state, zero, zero, f_xy, 0.0, self._pose)

    def observation(self):
        x = self._state
        fo = forward_observation(self.track, self._pose.s, x[:2], x[2], self.config.fo_distances)
        return normalize_observation(
            x[VX], x[OMEGA], x[DELTA], self._pose.d_c, self._pose.phi, fo.vectors, self.config, self.params
        )

    def control_for(self, action):
        """Real control applied for a virtual action in the current state."""
        a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
        if self.episode.mode == "am":
            return map_action(self.table, self._state[VX], self._state[DELTA], a,
                              conservative=self.episode.conservative)
        return a

    def step(self, action):
        """
        Advance one control period.

        Returns:
        --------
        tuple
            (observation, reward, done, info); info carries the applied
            control "u", "F_xy", "friction_violation", "laps", "lap_time"
            (set on the step that completes a lap), "termination" and
            "truncated" (step budget exhausted rather than a failure)
        """
        if self._done:
            raise UsageError("cannot step a finished episode; call reset() first")
        action = np.asarray(action, dtype=float)
        if action.shape != (2,) or not np.all(np.isfinite(action)):
            raise UsageError(f"action must be a finite pair, got {action!r}")

        params, cfg, mode = self.params, self.config, self.episode.mode
        a = np.clip(action, -1.0, 1.0)
        u = self.control_for(a)
        x = self._state
        f_xy = float(tire_forces(x, u, params)["F_xy"])
        violation = not bool(check_friction_array(x, u, params, cfg.horizon_steps, cfg.dt))
        if violation:
            self.violations += 1

        x_new = rk4_step_array(x, u, cfg.dt, params)
        if not np.all(np.isfinite(x_new)):
            raise RuntimeFault(f"non-finite vehicle state after step {self.steps}: {x_new}")
        s_prev = self._pose.s
        pose = track_pose(self.track, x_new[:2], x_new[2], hint=s_prev)
        self._state, self._pose = x_new, pose
        self.t += cfg.dt
        self.steps += 1

        lap_time = None
        event = lap_events(self.track, s_prev, pose.s) if self.track.closed else None
        if event is not None and event.crossed_finish:
            if event.direction == "forward":
                self.laps += 1
                lap_time = self.t - self._lap_start
                self.lap_times.append(lap_time)
                self._lap_start = self.t
            else:
                self.laps -= 1

        flags = terminal_predicates(pose)
        penalized = violation and mode == "penalty"
        reward = compute_reward(x_new[VX], pose.phi, flags.off_track, flags.wrong_way, penalized, mode)

        termination = None
        if flags.off_track:
            termination = "off_track"
        elif flags.wrong_way:
            termination = "wrong_way"
        elif penalized and self.episode.penalty_terminates:
            termination = "friction"
        elif not self.track.closed and pose.s >= self.track.length:
            termination = "track_end"
        elif self.steps >= self.episode.max_steps:
            termination = "time_limit"
        self._done = termination is not None

        if self.record:
            self.trajectory.record(self.t, self.state, a, u, f_xy, reward, pose)

        info = {
            "u": u,
            "F_xy": f_xy,
            "friction_violation": violation,
            "violations": self.violations,
            "laps": self.laps,
            "lap_time": lap_time,
            "termination": termination,
            "truncated": termination in ("time_limit", "track_end"),
        }
        return self.observation(), reward, self._done, info

