"""
Replay Buffer Module
Fixed-capacity ring buffer of transitions with uniform minibatch sampling.
"""

from dataclasses import dataclass

import numpy as np

from utils.errors import UsageError

DEFAULT_CAPACITY = 1_000_000


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray

    def __len__(self):
        return len(self.rewards)


class ReplayBuffer:
    """
    Ring buffer: once full, the oldest transition is overwritten first.

    `dones` holds the terminal flag used to mask bootstrapping; episodes cut
    by the step budget are stored as non-terminal.
    """

    def __init__(self, obs_dim, action_dim=2, capacity=DEFAULT_CAPACITY):
        if capacity < 1:
            raise UsageError(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity)
        self.size = 0
        self.cursor = 0

    def __len__(self):
        return self.size

    def add(self, obs, action, reward, next_obs, done):
        i = self.cursor
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size, rng):
        """Uniform minibatch, without replacement inside the batch."""
        if batch_size > self.size:
            raise UsageError(f"cannot sample {batch_size} transitions from a buffer holding {self.size}")
        index = rng.choice(self.size, size=batch_size, replace=False)
        return Batch(
            obs=self.obs[index],
            actions=self.actions[index],
            rewards=self.rewards[index],
            next_obs=self.next_obs[index],
            dones=self.dones[index],
        )
