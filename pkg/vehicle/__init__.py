"""
Vehicle package for the race-driving toolkit
"""

from .params import VehicleParams, load_vehicle_params
from .dynamics import (
    DEFAULT_DT,
    DEFAULT_HORIZON_STEPS,
    ControlInput,
    ForceBreakdown,
    VehicleState,
    braking_force,
    check_friction,
    check_friction_array,
    derivative_array,
    kinematic_slip,
    kinematic_turn_rate,
    lateral_forces,
    resistance_forces,
    resultant_acceleration,
    resultant_tire_force,
    rk4_step,
    rk4_step_array,
    state_derivative,
    stopping_distance,
    time_to_speed,
    tire_forces,
    traction_force,
    wrap_angle,
)

__all__ = [
    'VehicleParams',
    'load_vehicle_params',
    'DEFAULT_DT',
    'DEFAULT_HORIZON_STEPS',
    'ControlInput',
    'ForceBreakdown',
    'VehicleState',
    'braking_force',
    'check_friction',
    'check_friction_array',
    'derivative_array',
    'kinematic_slip',
    'kinematic_turn_rate',
    'lateral_forces',
    'resistance_forces',
    'resultant_acceleration',
    'resultant_tire_force',
    'rk4_step',
    'rk4_step_array',
    'state_derivative',
    'stopping_distance',
    'time_to_speed',
    'tire_forces',
    'traction_force',
    'wrap_angle',
]
