"""
Seeded Random Streams
All randomness flows from one root seed. Components get independent child
generators derived through numpy's SeedSequence so that adding a consumer never
shifts the stream of another.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 20240501


class SeededRNG:
    """Root seed holder that hands out named, reproducible numpy generators."""

    def __init__(self, seed: int = DEFAULT_SEED):
        self._seed = int(seed)

    @property
    def seed(self) -> int:
        return self._seed

    def stream(self, name: str) -> np.random.Generator:
        """Generator for a named consumer (e.g. "env", "init", "noise")."""
        key = [ord(c) for c in name]
        return np.random.default_rng(np.random.SeedSequence([self._seed, *key]))


def generator_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def restore_generator(state: dict) -> np.random.Generator:
    bit_generator = getattr(np.random, state["bit_generator"])()
    bit_generator.state = state
    return np.random.Generator(bit_generator)
