"""
Run Configuration Module
Layers command-line flags over RACEAM_* variables (from the environment or a
.env / --config file loaded with python-dotenv) over built-in defaults.
"""

import os
from dataclasses import dataclass, fields, replace

from dotenv import find_dotenv, load_dotenv

from .errors import ValidationError
from .rng import DEFAULT_SEED

ENV_PREFIX = "RACEAM_"


@dataclass(frozen=True)
class RunConfig:
    """Paths and knobs shared by every subcommand."""

    vehicle: str = None
    track: str = "oval-short"
    table: str = None
    checkpoint: str = None
    out: str = "runs"
    seed: int = DEFAULT_SEED
    mode: str = "am"
    mu_max: float = None
    grid: tuple = None
    iters: int = 300_000
    eval_every: int = 10_000

    def __post_init__(self):
        if self.mode not in ("am", "penalty", "none"):
            raise ValidationError(f"mode must be am, penalty or none, got {self.mode!r}")
        if not (0 <= self.seed < 2 ** 64):
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.iters < 0 or self.eval_every < 0:
            raise ValidationError("iters and eval_every must be >= 0")
        if self.mu_max is not None and not self.mu_max > 0.0:
            raise ValidationError(f"mu_max must be > 0, got {self.mu_max}")
        if self.grid is not None and (len(self.grid) != 3 or min(self.grid) < 2):
            raise ValidationError(f"grid needs three counts >= 2, got {self.grid}")

    def require(self, name):
        """Check that an input path is set and exists."""
        path = getattr(self, name)
        if path is None:
            raise ValidationError(f"--{name} is required for this command")
        if not os.path.exists(path):
            raise ValidationError(f"{name} file not found: {path}")
        return path


def parse_grid(text):
    """'Nv,Nd,Nt' -> (Nv, Nd, Nt)."""
    try:
        counts = tuple(int(part) for part in str(text).split(","))
    except ValueError:
        raise ValidationError(f"grid must look like Nv,Nd,Nt, got {text!r}") from None
    if len(counts) != 3:
        raise ValidationError(f"grid must have three counts, got {text!r}")
    if min(counts) < 2:
        raise ValidationError(f"grid counts must be >= 2, got {text!r}")
    return counts


_PARSERS = {
    "seed": int,
    "mu_max": float,
    "grid": parse_grid,
    "iters": int,
    "eval_every": int,
}


def _convert(name, text):
    try:
        return _PARSERS.get(name, str)(text)
    except ValueError:
        raise ValidationError(f"invalid value for {ENV_PREFIX}{name.upper()}: {text!r}") from None


def load_run_config(config_file=None, overrides=None):
    """
    Build the RunConfig for one invocation.

    Parameters:
    -----------
    config_file : str, optional
        dotenv file; when omitted a .env in the working directory is used
        if present
    overrides : dict, optional
        Values from command-line flags; None entries are ignored

    Returns:
    --------
    RunConfig
    """
    if config_file is not None:
        if not os.path.exists(config_file):
            raise ValidationError(f"config file not found: {config_file}")
        load_dotenv(config_file)
    else:
        load_dotenv(find_dotenv(usecwd=True))

    values = {}
    for f in fields(RunConfig):
        text = os.getenv(ENV_PREFIX + f.name.upper())
        if text is not None and text.strip():
            values[f.name] = _convert(f.name, text.strip())
    for name, value in (overrides or {}).items():
        if value is not None:
            values[name] = value
    return replace(RunConfig(), **values)
