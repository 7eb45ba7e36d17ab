"""
Race environment package for the race-driving toolkit
"""

from .mdp import EVENT_PENALTY, MODES, compute_reward, normalize_observation
from .trajectory import TRAJECTORY_COLUMNS, Trajectory, save_trajectory
from .env import EnvConfig, EpisodeConfig, RaceEnv

__all__ = [
    'EVENT_PENALTY',
    'MODES',
    'compute_reward',
    'normalize_observation',
    'TRAJECTORY_COLUMNS',
    'Trajectory',
    'save_trajectory',
    'EnvConfig',
    'EpisodeConfig',
    'RaceEnv',
]
