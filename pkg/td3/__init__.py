"""
TD3 package for the race-driving toolkit
"""

from .networks import HIDDEN_SIZES, MLP, Adam, NetworkSpec, soft_update
from .replay import Batch, ReplayBuffer
from .agent import TD3Agent, TD3Config
from .checkpoint import dump_checkpoint, load_checkpoint, parse_checkpoint, save_checkpoint
from .training import (
    ActorPolicy,
    EvaluationReport,
    LineFollowerPolicy,
    TrainingResult,
    ZeroPolicy,
    evaluate,
    run_episode,
    train,
)

__all__ = [
    'HIDDEN_SIZES',
    'MLP',
    'Adam',
    'NetworkSpec',
    'soft_update',
    'Batch',
    'ReplayBuffer',
    'TD3Agent',
    'TD3Config',
    'dump_checkpoint',
    'load_checkpoint',
    'parse_checkpoint',
    'save_checkpoint',
    'ActorPolicy',
    'EvaluationReport',
    'LineFollowerPolicy',
    'TrainingResult',
    'ZeroPolicy',
    'evaluate',
    'run_episode',
    'train',
]
