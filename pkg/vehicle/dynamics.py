"""
Vehicle Dynamics Module
Single-track (bicycle) race car model: powertrain, brake and resistance
forces, linear lateral tire forces, the friction-circle check and RK4 time
integration.

Every function works on numpy arrays as well as plain floats. States are
stored in arrays whose last axis holds [X, Y, psi, v_x, v_y, omega, delta]
and controls in arrays whose last axis holds [u_x, u_y], so whole grids of
car states can be simulated at once.
"""

import math
from dataclasses import dataclass

import numpy as np

from utils.errors import RuntimeFault, UsageError, ValidationError

DEFAULT_DT = 0.01
DEFAULT_HORIZON_STEPS = 10

X, Y, PSI, VX, VY, OMEGA, DELTA = range(7)
STATE_DIM = 7


@dataclass(frozen=True)
class VehicleState:
    """Dynamic state of the car (earth-frame pose, body-frame velocities)."""

    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    v_x: float = 0.0
    v_y: float = 0.0
    omega: float = 0.0
    delta: float = 0.0

    def as_array(self):
        return np.array([self.x, self.y, self.psi, self.v_x, self.v_y, self.omega, self.delta], dtype=float)

    @classmethod
    def from_array(cls, values):
        return cls(*(float(v) for v in values))

    @property
    def speed(self):
        return math.hypot(self.v_x, self.v_y)

    @property
    def beta(self):
        return math.atan2(self.v_y, self.v_x)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.as_array())))


@dataclass(frozen=True)
class ControlInput:
    """Normalized controls: u_x (motor > 0, brake < 0) and steering rate u_y."""

    u_x: float = 0.0
    u_y: float = 0.0

    def __post_init__(self):
        for name in ("u_x", "u_y"):
            value = getattr(self, name)
            if not (-1.0 <= value <= 1.0):
                raise ValidationError(f"control {name} must lie in [-1, 1], got {value!r}")

    def as_array(self):
        return np.array([self.u_x, self.u_y], dtype=float)

    @classmethod
    def from_array(cls, values):
        return cls(float(values[0]), float(values[1]))


@dataclass(frozen=True)
class ForceBreakdown:
    F_tx: float
    F_yf: float
    F_yr: float
    F_aero: float
    F_roll: float
    F_xy: float

    @property
    def F_y(self):
        return self.F_yf + self.F_yr


def _scalar(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


def traction_force(v_x, u_m, params):
    """
    Motor traction force on the driven wheels.

    Constant torque up to the base speed, power limited above it.

    Parameters:
    -----------
    v_x : float or np.ndarray
        Longitudinal velocity (m/s), >= 0
    u_m : float or np.ndarray
        Normalized motor command in [0, 1]
    params : VehicleParams

    Returns:
    --------
    float or np.ndarray
        Traction force (N)
    """
    v_x = np.asarray(v_x, dtype=float)
    torque_limited = params.k_motor * np.asarray(u_m, dtype=float) / params.wheel_radius
    above_base = v_x > params.v_base
    power_limited = params.p_max / np.where(above_base, v_x, params.v_base)
    return _scalar(np.where(above_base, np.minimum(torque_limited, power_limited), torque_limited))


def braking_force(u_b, params):
    return _scalar(params.k_brake * np.asarray(u_b, dtype=float))


def resistance_forces(v_x, params):
    """Aerodynamic drag (quadratic in v_x) and rolling resistance (N)."""
    v_x = np.asarray(v_x, dtype=float)
    f_aero = 0.5 * params.rho_air * params.c_drag * params.frontal_area * v_x ** 2
    f_roll = np.where(v_x > params.eps_v, params.f_roll * params.mass * params.g, 0.0)
    return _scalar(f_aero), _scalar(f_roll)


def split_longitudinal(u_x):
    """Split the combined channel into (motor, brake) commands; never both."""
    u_x = np.asarray(u_x, dtype=float)
    return _scalar(np.clip(u_x, 0.0, 1.0)), _scalar(np.clip(-u_x, 0.0, 1.0))


def kinematic_slip(delta, params):
    """Sideslip angle of the zero-tire-slip (kinematic) model."""
    return np.arctan(params.l_r * np.tan(delta) / params.wheelbase)


def kinematic_turn_rate(v, delta, params):
    beta = kinematic_slip(delta, params)
    return v * np.tan(delta) * np.cos(beta) / params.wheelbase


def _dynamic_lateral(v_x, v_y, omega, delta, params):
    v_x = np.where(v_x > params.v_switch, v_x, 1.0)
    f_yf = 2.0 * params.c_alpha_f * (delta - np.arctan((v_y + omega * params.l_f) / v_x))
    f_yr = 2.0 * params.c_alpha_r * (-np.arctan((v_y - omega * params.l_r) / v_x))
    return f_yf, f_yr


def _kinematic_lateral(v_x, delta, params):
    # centripetal demand of the kinematic path, shared by the axles as a
    # yaw-moment-free pair
    f_lat = params.mass * v_x * kinematic_turn_rate(v_x, delta, params)
    return f_lat * params.l_r / params.wheelbase, f_lat * params.l_f / params.wheelbase


def lateral_forces(state, params):
    """
    Front and rear axle lateral forces from the tire slip angles (N).

    Only defined in the dynamic regime (v_x > params.v_switch); the slip
    angles divide by v_x.
    """
    if isinstance(state, VehicleState):
        state = state.as_array()
    state = np.asarray(state, dtype=float)
    v_x = state[..., VX]
    if np.any(v_x <= params.v_switch):
        raise UsageError(
            f"lateral_forces is defined for v_x > {params.v_switch} m/s only; "
            "the kinematic model applies below it"
        )
    f_yf, f_yr = _dynamic_lateral(v_x, state[..., VY], state[..., OMEGA], state[..., DELTA], params)
    return _scalar(f_yf), _scalar(f_yr)


def tire_forces(x, u, params):
    """
    All forces acting on the car for states x (..., 7) under controls u (..., 2).

    Returns a dict of arrays: F_tx, F_yf, F_yr, F_aero, F_roll, F_xy, dynamic.
    """
    v_x, v_y, omega, delta = x[..., VX], x[..., VY], x[..., OMEGA], x[..., DELTA]
    u_m, u_b = split_longitudinal(u[..., 0])

    f_trac = traction_force(np.maximum(v_x, 0.0), u_m, params)
    f_brake = np.where(v_x > 0.0, braking_force(u_b, params), 0.0)
    f_aero, f_roll = resistance_forces(np.maximum(v_x, 0.0), params)
    f_tx = f_trac - f_brake

    dynamic = v_x > params.v_switch
    dyn_f, dyn_r = _dynamic_lateral(v_x, v_y, omega, delta, params)
    kin_f, kin_r = _kinematic_lateral(np.maximum(v_x, 0.0), delta, params)
    f_yf = np.where(dynamic, dyn_f, kin_f)
    f_yr = np.where(dynamic, dyn_r, kin_r)

    return {
        "F_tx": f_tx,
        "F_yf": f_yf,
        "F_yr": f_yr,
        "F_aero": f_aero,
        "F_roll": f_roll,
        "F_xy": np.hypot(f_tx, f_yf + f_yr),
        "dynamic": dynamic,
    }


def derivative_array(x, u, params):
    """Time derivative of states x (..., 7) under held controls u (..., 2)."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    forces = tire_forces(x, u, params)
    psi, v_x, v_y, omega, delta = x[..., PSI], x[..., VX], x[..., VY], x[..., OMEGA], x[..., DELTA]
    dynamic = forces["dynamic"]

    dv_x = (forces["F_tx"] - forces["F_aero"] - forces["F_roll"]) / params.mass
    dv_x = np.where((v_x <= 0.0) & (dv_x < 0.0), 0.0, dv_x)

    f_y = forces["F_yf"] + forces["F_yr"]
    dv_y = np.where(dynamic, f_y / params.mass - omega * v_x, 0.0)
    domega = np.where(
        dynamic,
        (forces["F_yf"] * params.l_f - forces["F_yr"] * params.l_r) / params.inertia_z,
        0.0,
    )

    beta = np.where(dynamic, np.arctan2(v_y, v_x), kinematic_slip(delta, params))
    speed = np.where(dynamic, np.hypot(v_x, v_y), np.maximum(v_x, 0.0))
    dpsi = np.where(dynamic, omega, kinematic_turn_rate(np.maximum(v_x, 0.0), delta, params))

    u_y = u[..., 1]
    saturated = ((delta >= params.delta_max) & (u_y > 0.0)) | ((delta <= -params.delta_max) & (u_y < 0.0))
    ddelta = np.where(saturated, 0.0, u_y * params.delta_rate_max)

    return np.stack(
        [
            speed * np.cos(psi + beta),
            speed * np.sin(psi + beta),
            dpsi,
            dv_x,
            dv_y,
            domega,
            ddelta,
        ],
        axis=-1,
    )


def wrap_angle(angle):
    """Wrap angles to (-pi, pi]."""
    angle = np.asarray(angle, dtype=float)
    inside = (angle > -math.pi) & (angle <= math.pi)
    return _scalar(np.where(inside, angle, math.pi - np.mod(math.pi - angle, 2.0 * math.pi)))


def _finish_step(x_new, params):
    x_new[..., VX] = np.maximum(x_new[..., VX], 0.0)
    x_new[..., DELTA] = np.clip(x_new[..., DELTA], -params.delta_max, params.delta_max)
    x_new[..., PSI] = wrap_angle(x_new[..., PSI])

    kinematic = x_new[..., VX] <= params.v_switch
    v_x, delta = x_new[..., VX], x_new[..., DELTA]
    x_new[..., VY] = np.where(kinematic, v_x * np.sin(kinematic_slip(delta, params)), x_new[..., VY])
    x_new[..., OMEGA] = np.where(kinematic, kinematic_turn_rate(v_x, delta, params), x_new[..., OMEGA])
    return x_new


def rk4_stages(x, u, dt, params):
    """
    One classical RK4 step.

    Returns:
    --------
    tuple
        (next state, [stage-2, stage-3, stage-4 states]) - the intermediate
        states at which the derivative was evaluated
    """
    x = np.asarray(x, dtype=float)
    k1 = derivative_array(x, u, params)
    x2 = x + 0.5 * dt * k1
    k2 = derivative_array(x2, u, params)
    x3 = x + 0.5 * dt * k2
    k3 = derivative_array(x3, u, params)
    x4 = x + dt * k3
    k4 = derivative_array(x4, u, params)
    x_new = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _finish_step(x_new, params), [x2, x3, x4]


def rk4_step_array(x, u, dt, params):
    return rk4_stages(x, u, dt, params)[0]


def check_friction_array(x, u, params, horizon_steps=DEFAULT_HORIZON_STEPS, dt=DEFAULT_DT):
    """
    Friction-circle check for many (state, control) pairs at once.

    The control is held for horizon_steps RK4 steps; the resultant tire force
    is evaluated at the initial state, every RK4 stage state and every step
    end state.

    Returns:
    --------
    np.ndarray of bool
        True where |F_xy| <= mu_max * m * g throughout
    """
    if horizon_steps < 1:
        raise UsageError(f"horizon_steps must be >= 1, got {horizon_steps}")
    limit = params.max_friction_force
    x = np.asarray(x, dtype=float)
    u = np.broadcast_to(np.asarray(u, dtype=float), x.shape[:-1] + (2,))
    ok = tire_forces(x, u, params)["F_xy"] <= limit
    for _ in range(horizon_steps):
        x, stages = rk4_stages(x, u, dt, params)
        for stage in stages:
            ok &= tire_forces(stage, u, params)["F_xy"] <= limit
        ok &= tire_forces(x, u, params)["F_xy"] <= limit
    return ok


def _require_finite(values, what):
    if not np.all(np.isfinite(values)):
        raise RuntimeFault(f"non-finite {what}: {values}")


def state_derivative(state, control, params):
    """d(state)/dt as a VehicleState-shaped record (fields are rates)."""
    rates = derivative_array(state.as_array(), control.as_array(), params)
    _require_finite(rates, "state derivative")
    return VehicleState.from_array(rates)


def rk4_step(state, control, dt, params):
    """Advance the car by dt seconds with the control held constant."""
    if dt <= 0.0:
        raise UsageError(f"dt must be > 0, got {dt}")
    x_new = rk4_step_array(state.as_array(), control.as_array(), dt, params)
    _require_finite(x_new, "vehicle state")
    return VehicleState.from_array(x_new)


def resultant_tire_force(state, control, params):
    forces = tire_forces(state.as_array(), control.as_array(), params)
    return ForceBreakdown(
        F_tx=float(forces["F_tx"]),
        F_yf=float(forces["F_yf"]),
        F_yr=float(forces["F_yr"]),
        F_aero=float(forces["F_aero"]),
        F_roll=float(forces["F_roll"]),
        F_xy=float(forces["F_xy"]),
    )


def check_friction(state, control, params, horizon_steps=DEFAULT_HORIZON_STEPS, dt=DEFAULT_DT):
    return bool(check_friction_array(state.as_array(), control.as_array(), params, horizon_steps, dt))


def resultant_acceleration(state, control, params):
    """|a_xy| = |F_xy| / m, the constraint stated as an acceleration."""
    return resultant_tire_force(state, control, params).F_xy / params.mass


def stopping_distance(v0, params, u_b=1.0, dt=DEFAULT_DT, max_time=60.0):
    """Distance (m) to stop from v0 on a straight with a held brake command."""
    state = VehicleState(v_x=float(v0))
    control = ControlInput(u_x=-float(u_b), u_y=0.0)
    for _ in range(int(max_time / dt)):
        if state.v_x <= 0.0:
            break
        state = rk4_step(state, control, dt, params)
    return state.x


def time_to_speed(v_target, params, u_m=1.0, dt=DEFAULT_DT, max_time=120.0):
    """Time (s) to reach v_target from standstill at a held motor command."""
    state = VehicleState()
    control = ControlInput(u_x=float(u_m), u_y=0.0)
    t = 0.0
    while state.v_x < v_target:
        if t > max_time:
            raise RuntimeFault(f"{v_target} m/s not reached within {max_time} s")
        previous = state.v_x
        state = rk4_step(state, control, dt, params)
        t += dt
        if state.v_x >= v_target:
            # linear interpolation inside the last step
            return t - dt * (state.v_x - v_target) / (state.v_x - previous)
    return t
