"""
Utils package for the race-driving toolkit
"""

from .errors import (
    RaceError,
    RuntimeFault,
    TableFormatError,
    TableMismatchWarning,
    UsageError,
    ValidationError,
)
from .atomic import atomic_write, write_bytes_atomic, write_text_atomic
from .rng import DEFAULT_SEED, SeededRNG
from .config import RunConfig, load_run_config, parse_grid

__all__ = [
    'RaceError',
    'RuntimeFault',
    'TableFormatError',
    'TableMismatchWarning',
    'UsageError',
    'ValidationError',
    'atomic_write',
    'write_bytes_atomic',
    'write_text_atomic',
    'DEFAULT_SEED',
    'SeededRNG',
    'RunConfig',
    'load_run_config',
    'parse_grid',
]
