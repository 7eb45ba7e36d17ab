"""
Race MDP Module
Reward and observation normalization of the race-driving task.
"""

import math

import numpy as np

from utils.errors import UsageError

EVENT_PENALTY = -100.0
MODES = ("am", "penalty", "none")


def compute_reward(v_x, phi, off_track=False, wrong_way=False, friction_violation=False, mode="am"):
    """
    Velocity reward along the track plus event penalties.

    r = v_x * cos(phi), with -100 each for leaving the track and driving the
    wrong way. The friction penalty only applies in penalty mode; with action
    mapping the constraint is enforced by the mapping instead.

    Examples:
    ---------
    >>> compute_reward(20.0, 0.0)
    20.0
    >>> round(compute_reward(15.0, 0.2, off_track=True), 2)
    -85.3
    """
    if mode not in MODES:
        raise UsageError(f"unknown constraint mode {mode!r}")
    if not (math.isfinite(v_x) and math.isfinite(phi)):
        raise UsageError(f"reward inputs must be finite, got v_x={v_x}, phi={phi}")
    reward = v_x * math.cos(phi)
    if off_track:
        reward += EVENT_PENALTY
    if wrong_way:
        reward += EVENT_PENALTY
    if friction_violation and mode == "penalty":
        reward += EVENT_PENALTY
    return float(reward)


def normalize_observation(v_x, omega, delta, d_c, phi, fo_vectors, config, params):
    """
    Scale raw states into the network input box.

    Parameters:
    -----------
    v_x, omega, delta, d_c, phi : float
        Raw car and track states (m/s, rad/s, rad, normalized offset, rad)
    fo_vectors : np.ndarray
        Forward-observation vectors (N, 2) in meters, body frame
    config : EnvConfig
        Normalization constants (v_norm, omega_norm, fo_norm)
    params : VehicleParams

    Returns:
    --------
    np.ndarray
        [v_x, omega, delta, d_c, phi, fo...] of length 5 + 2N, every
        component clamped to [-1, 1] (v_x to [0, 1])
    """
    head = np.array([
        min(max(v_x / config.v_norm, 0.0), 1.0),
        omega / config.omega_norm,
        delta / params.delta_max,
        d_c,
        phi / math.pi,
    ])
    head[1:] = np.clip(head[1:], -1.0, 1.0)
    fo = np.clip(np.asarray(fo_vectors, dtype=float).reshape(-1) / config.fo_norm, -1.0, 1.0)
    return np.concatenate([head, fo])
