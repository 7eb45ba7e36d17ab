"""
Boundary Sampling Module
Numerically samples the boundary function rho_bar(v, delta, theta): for
every car state (v, delta) on a grid and every control direction theta, the
longest control vector in that direction that keeps the tire force inside the
friction circle.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from utils.errors import ValidationError
from vehicle.dynamics import (
    DEFAULT_DT,
    DEFAULT_HORIZON_STEPS,
    OMEGA,
    STATE_DIM,
    VX,
    VY,
    DELTA,
    VehicleState,
    check_friction_array,
    kinematic_slip,
    kinematic_turn_rate,
)

BISECTION_TOL = 1e-3
DEFAULT_V_MAX = 30.0
DESK_COUNTS = (64, 64, 72)
FULL_COUNTS = (200, 200, 200)


@dataclass(frozen=True)
class GridSpec:
    """Sampling grid over speed, steering angle and control direction."""

    n_v: int
    n_delta: int
    n_theta: int
    v_min: float = 0.0
    v_max: float = DEFAULT_V_MAX
    delta_min: float = -math.radians(35.0)
    delta_max: float = math.radians(35.0)
    theta_min: float = -math.pi
    theta_max: float = math.pi

    def __post_init__(self):
        for name in ("n_v", "n_delta", "n_theta"):
            if int(getattr(self, name)) < 2:
                raise ValidationError(f"grid count {name} must be >= 2, got {getattr(self, name)}")
        if not (0.0 <= self.v_min < self.v_max):
            raise ValidationError(f"grid speed range [{self.v_min}, {self.v_max}] is invalid")
        if not (self.delta_min < self.delta_max):
            raise ValidationError(f"grid steering range [{self.delta_min}, {self.delta_max}] is invalid")
        if (self.theta_min, self.theta_max) != (-math.pi, math.pi):
            raise ValidationError("grid direction range must be (-pi, pi]")

    @classmethod
    def for_vehicle(cls, params, counts=DESK_COUNTS, v_max=DEFAULT_V_MAX):
        n_v, n_delta, n_theta = (int(c) for c in counts)
        return cls(n_v, n_delta, n_theta, 0.0, float(v_max), -params.delta_max, params.delta_max)

    @property
    def counts(self):
        return (self.n_v, self.n_delta, self.n_theta)

    @property
    def shape(self):
        return self.counts

    @property
    def v_nodes(self):
        return np.linspace(self.v_min, self.v_max, self.n_v)

    @property
    def delta_nodes(self):
        return np.linspace(self.delta_min, self.delta_max, self.n_delta)

    @property
    def theta_nodes(self):
        """n_theta evenly spaced directions over (-pi, pi]; the last is pi."""
        theta = self.theta_min + (2.0 * math.pi / self.n_theta) * np.arange(1, self.n_theta + 1)
        theta[-1] = self.theta_max
        return theta

    @property
    def steps(self):
        return (
            (self.v_max - self.v_min) / (self.n_v - 1),
            (self.delta_max - self.delta_min) / (self.n_delta - 1),
            2.0 * math.pi / self.n_theta,
        )

    def check_vehicle(self, params):
        if self.delta_max > params.delta_max + 1e-12 or self.delta_min < -params.delta_max - 1e-12:
            raise ValidationError(
                f"grid steering range exceeds the vehicle limit of {params.delta_max:.6f} rad"
            )


def rho_square(theta):
    """Radial distance from the origin to the unit square [-1, 1]^2 along theta."""
    theta = np.asarray(theta, dtype=float)
    bound = 1.0 / np.maximum(np.abs(np.cos(theta)), np.abs(np.sin(theta)))
    return float(bound) if bound.ndim == 0 else bound


def steady_state_array(v, delta, params):
    """
    Steady-cornering states at speed v and steering angle delta, shape (..., 7).

    Above v_switch the state is the equilibrium of the dynamic single-track
    model with linear tires: omega = v * delta / (L + K v^2), where K is the
    understeer gradient, and v_y follows from the rear slip angle that carries
    the rear share of the centripetal force. At or below v_switch the
    kinematic sideslip and turn rate are used.
    """
    v, delta = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(delta, dtype=float))
    L = params.wheelbase
    c_f = 2.0 * params.c_alpha_f
    c_r = 2.0 * params.c_alpha_r
    understeer = params.mass * (params.l_r / c_f - params.l_f / c_r) / L

    omega_dyn = v * delta / (L + understeer * v ** 2)
    rear_slip = params.mass * omega_dyn * v * params.l_f / (L * c_r)
    v_y_dyn = omega_dyn * params.l_r - v * rear_slip

    kinematic = v <= params.v_switch
    omega = np.where(kinematic, kinematic_turn_rate(v, delta, params), omega_dyn)
    v_y = np.where(kinematic, v * np.sin(kinematic_slip(delta, params)), v_y_dyn)

    state = np.zeros(v.shape + (STATE_DIM,))
    state[..., VX] = v
    state[..., VY] = v_y
    state[..., OMEGA] = omega
    state[..., DELTA] = delta
    return state


def steady_state_for(v, delta, params):
    """Sampling state at grid node (v, delta); X, Y and psi are zero."""
    if not (0.0 <= v) or abs(delta) > params.delta_max + 1e-12:
        raise ValidationError(f"sampling state out of range: v={v}, delta={delta}")
    return VehicleState.from_array(steady_state_array(v, delta, params))


def max_safe_length_array(states, theta, params, horizon_steps=DEFAULT_HORIZON_STEPS,
                          dt=DEFAULT_DT, tol=BISECTION_TOL):
    """
    Largest admissible control length along theta for each state.

    states has shape (..., 7) and theta the matching leading shape. Returns
    the feasible end of the final bisection bracket, capped at the unit
    square, and 0 where even the zero control violates the constraint.
    """
    states = np.asarray(states, dtype=float)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), states.shape[:-1])
    cap = np.broadcast_to(rho_square(theta), theta.shape)
    direction = np.stack([np.cos(theta), np.sin(theta)], axis=-1)

    def feasible(length):
        return check_friction_array(states, length[..., None] * direction, params, horizon_steps, dt)

    full_ok = feasible(cap)
    zero_ok = feasible(np.zeros(theta.shape))

    lo = np.zeros(theta.shape)
    hi = np.array(cap, dtype=float)
    n_iter = max(1, math.ceil(math.log2(float(np.max(cap)) / tol)))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        ok = feasible(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)

    return np.where(full_ok, cap, np.where(zero_ok, lo, 0.0))


def max_safe_length(state, theta, params, horizon_steps=DEFAULT_HORIZON_STEPS, dt=DEFAULT_DT, tol=BISECTION_TOL):
    if isinstance(state, VehicleState):
        state = state.as_array()
    return float(max_safe_length_array(state, theta, params, horizon_steps, dt, tol))


def _build_slice(job):
    params, grid, index, horizon_steps, dt, tol = job
    v = grid.v_nodes[index]
    states = steady_state_array(np.full(grid.n_delta, v), grid.delta_nodes, params)
    states = np.broadcast_to(states[:, None, :], (grid.n_delta, grid.n_theta, STATE_DIM))
    theta = np.broadcast_to(grid.theta_nodes[None, :], (grid.n_delta, grid.n_theta))
    return max_safe_length_array(states, theta, params, horizon_steps, dt, tol)


def sample_boundary(params, grid, horizon_steps=DEFAULT_HORIZON_STEPS, dt=DEFAULT_DT,
                    tol=BISECTION_TOL, workers=1, progress=True):
    """
    Fill rho_bar[i, j, k] for every grid node.

    Work is split by speed slice; each slice is computed with identical array
    shapes whatever the worker count, so the result is bit-identical for any
    number of workers.

    Returns:
    --------
    tuple
        (rho_bar array of shape grid.counts, build wall time in seconds)
    """
    grid.check_vehicle(params)
    jobs = [(params, grid, i, horizon_steps, dt, tol) for i in range(grid.n_v)]
    started = time.perf_counter()
    bar = tqdm(total=grid.n_v, desc="Sampling boundary", unit="slice", disable=not progress)
    slices = []
    if workers <= 1:
        for job in jobs:
            slices.append(_build_slice(job))
            bar.update(1)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(_build_slice, jobs):
                slices.append(result)
                bar.update(1)
    bar.close()
    rho = np.ascontiguousarray(np.stack(slices, axis=0), dtype=float)
    return rho, time.perf_counter() - started
