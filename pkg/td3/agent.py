"""
TD3 Agent Module
Twin delayed deep deterministic policy gradient: an actor, two critics, their
target copies and the update rules (clipped double-Q targets with target
policy smoothing, delayed actor and target updates).
"""

from dataclasses import dataclass

import numpy as np

from utils.errors import RuntimeFault, UsageError, ValidationError
from utils.rng import SeededRNG

from .networks import MLP, Adam, soft_update
from .replay import DEFAULT_CAPACITY

ACTOR_FINAL_SCALE = 0.01


@dataclass(frozen=True)
class TD3Config:
    """Training hyper-parameters."""

    gamma: float = 0.99
    lr_critic: float = 3e-4
    lr_actor: float = 3e-4
    tau_critic: float = 0.005
    tau_actor: float = 0.005
    batch_size: int = 256
    buffer_size: int = DEFAULT_CAPACITY
    exploration_noise: float = 0.1
    target_noise: float = 0.2
    noise_clip: float = 0.5
    policy_delay: int = 2
    warmup_steps: int = 5000
    max_iterations: int = 300_000
    eval_every: int = 10_000
    eval_episodes: int = 5
    checkpoint_every: int = 10_000

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise ValidationError(f"gamma must lie in [0, 1], got {self.gamma}")
        for name in ("lr_critic", "lr_actor", "tau_critic", "tau_actor"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.policy_delay < 1:
            raise ValidationError(f"policy_delay must be >= 1, got {self.policy_delay}")
        if self.batch_size < 1 or self.buffer_size < self.batch_size:
            raise ValidationError("batch_size must be >= 1 and no larger than buffer_size")
        if self.max_iterations < 0 or self.warmup_steps < 0:
            raise ValidationError("max_iterations and warmup_steps must be >= 0")
        if min(self.exploration_noise, self.target_noise, self.noise_clip) < 0.0:
            raise ValidationError("noise scales must be >= 0")


def _require_finite(values, what):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise RuntimeFault(f"non-finite {what}")


class TD3Agent:
    """
    Actor, twin critics and their targets with one Adam optimizer per
    online network.
    """

    def __init__(self, spec, config=None, rng=None):
        self.spec = spec
        self.config = config or TD3Config()
        rng = rng or SeededRNG()
        init = rng.stream("init")
        self.actor = MLP(spec.actor_sizes, "tanh", init, final_scale=ACTOR_FINAL_SCALE)
        self.critic_1 = MLP(spec.critic_sizes, "linear", init)
        self.critic_2 = MLP(spec.critic_sizes, "linear", init)
        self.actor_target = self.actor.copy()
        self.critic_1_target = self.critic_1.copy()
        self.critic_2_target = self.critic_2.copy()
        self.actor_opt = Adam(self.actor.params, self.config.lr_actor)
        self.critic_1_opt = Adam(self.critic_1.params, self.config.lr_critic)
        self.critic_2_opt = Adam(self.critic_2.params, self.config.lr_critic)
        self.noise_rng = rng.stream("target-noise")
        self.updates = 0

    @property
    def networks(self):
        """The six networks in checkpoint order."""
        return [
            self.actor, self.actor_target,
            self.critic_1, self.critic_2,
            self.critic_1_target, self.critic_2_target,
        ]

    @property
    def optimizers(self):
        return [self.actor_opt, self.critic_1_opt, self.critic_2_opt]

    def act(self, obs):
        """Deterministic action for a single observation."""
        return self.actor.forward(obs)[0]

    def critic_value(self, critic, obs, actions):
        return critic.forward(np.concatenate([obs, actions], axis=1))[:, 0]

    def compute_targets(self, batch):
        """
        y = r + gamma * (1 - done) * min_j Q'_j(s', clip(pi'(s') + eps, -1, 1)),
        eps drawn per sample and action dimension and clipped to [-c, c].
        """
        if len(batch) == 0:
            raise UsageError("cannot compute targets for an empty batch")
        cfg = self.config
        noise = self.noise_rng.normal(0.0, cfg.target_noise, size=(len(batch), self.spec.action_dim))
        noise = np.clip(noise, -cfg.noise_clip, cfg.noise_clip)
        next_actions = np.clip(self.actor_target.forward(batch.next_obs) + noise, -1.0, 1.0)
        q1 = self.critic_value(self.critic_1_target, batch.next_obs, next_actions)
        q2 = self.critic_value(self.critic_2_target, batch.next_obs, next_actions)
        return batch.rewards + cfg.gamma * (1.0 - batch.dones) * np.minimum(q1, q2)

    def critic_update(self, batch, targets):
        """One Adam step per critic on the mean squared TD error; returns both losses."""
        inputs = np.concatenate([batch.obs, batch.actions], axis=1)
        losses = []
        for critic, opt in ((self.critic_1, self.critic_1_opt), (self.critic_2, self.critic_2_opt)):
            q, cache = critic.forward_cache(inputs)
            error = q[:, 0] - targets
            loss = float(np.mean(error ** 2))
            if not np.isfinite(loss):
                raise RuntimeFault(
                    f"non-finite critic loss at update {self.updates} "
                    f"(targets in [{np.min(targets)}, {np.max(targets)}], "
                    f"rewards in [{np.min(batch.rewards)}, {np.max(batch.rewards)}])"
                )
            grads, _ = critic.backward(cache, (2.0 / len(targets)) * error[:, None])
            _require_finite(grads, "critic gradient")
            opt.step(critic.params, grads)
            losses.append(loss)
        return tuple(losses)

    def actor_gradient(self, obs):
        """
        Gradient of mean Q_1(s, pi(s)) with respect to the actor parameters.

        Returns:
        --------
        tuple
            (gradients in actor.params order, mean Q_1)
        """
        actions, actor_cache = self.actor.forward_cache(obs)
        q, critic_cache = self.critic_1.forward_cache(np.concatenate([obs, actions], axis=1))
        _, grad_input = self.critic_1.backward(critic_cache, np.full_like(q, 1.0 / len(q)))
        grads, _ = self.actor.backward(actor_cache, grad_input[:, self.spec.obs_dim:])
        return grads, float(np.mean(q))

    def actor_update(self, batch):
        """
        One ascent step on mean Q_1(s, pi(s)); the gradient flows through
        critic 1 into the actor, the critic itself is left unchanged.

        Returns the performance estimate before the step.
        """
        if len(batch) == 0:
            raise UsageError("cannot update the actor on an empty batch")
        grads, performance = self.actor_gradient(batch.obs)
        _require_finite(grads, "actor gradient")
        self.actor_opt.step(self.actor.params, [-g for g in grads])
        return performance

    def soft_update_targets(self):
        soft_update(self.actor_target, self.actor, self.config.tau_actor)
        soft_update(self.critic_1_target, self.critic_1, self.config.tau_critic)
        soft_update(self.critic_2_target, self.critic_2, self.config.tau_critic)

    def update(self, batch):
        """Critic step every call; actor and target steps every policy_delay calls."""
        self.updates += 1
        loss_1, loss_2 = self.critic_update(batch, self.compute_targets(batch))
        performance = None
        if self.updates % self.config.policy_delay == 0:
            performance = self.actor_update(batch)
            self.soft_update_targets()
        return {"loss_c1": loss_1, "loss_c2": loss_2, "performance": performance}
