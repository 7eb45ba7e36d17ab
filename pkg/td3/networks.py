"""
Neural Network Module
Fully connected networks in plain numpy: rectified-linear hidden layers,
linear or hyperbolic-tangent output, explicit backpropagation (including the
gradient with respect to the input, needed by the policy gradient) and the
Adam optimizer.
"""

from dataclasses import dataclass

import numpy as np

from utils.errors import UsageError

HIDDEN_SIZES = (256, 256)
OUTPUTS = ("linear", "tanh")


@dataclass(frozen=True)
class NetworkSpec:
    """Layer sizes of the actor and the critics."""

    obs_dim: int
    action_dim: int = 2
    hidden: tuple = HIDDEN_SIZES

    def __post_init__(self):
        if self.obs_dim < 1 or self.action_dim < 1 or any(h < 1 for h in self.hidden):
            raise UsageError(f"invalid network dimensions: {self}")

    @property
    def actor_sizes(self):
        return (self.obs_dim, *self.hidden, self.action_dim)

    @property
    def critic_sizes(self):
        return (self.obs_dim + self.action_dim, *self.hidden, 1)


class MLP:
    """
    Multilayer perceptron.

    Weights are stored as (fan_in, fan_out) matrices so a batch of inputs of
    shape (N, fan_in) is propagated with x @ W + b.
    """

    def __init__(self, sizes, output="linear", rng=None, final_scale=1.0):
        if output not in OUTPUTS:
            raise UsageError(f"output activation must be one of {OUTPUTS}, got {output!r}")
        if len(sizes) < 2:
            raise UsageError("a network needs at least an input and an output size")
        self.sizes = tuple(int(s) for s in sizes)
        self.output = output
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.params.append(rng.uniform(-bound, bound, size=fan_out))
        self.params[-2] *= final_scale
        self.params[-1] *= final_scale

    @property
    def n_layers(self):
        return len(self.sizes) - 1

    @property
    def n_parameters(self):
        return sum(p.size for p in self.params)

    def copy(self):
        clone = MLP.__new__(MLP)
        clone.sizes = self.sizes
        clone.output = self.output
        clone.params = [p.copy() for p in self.params]
        return clone

    def set_parameters(self, params):
        if len(params) != len(self.params) or any(a.shape != b.shape for a, b in zip(params, self.params)):
            raise UsageError("parameter shapes do not match the network layout")
        for target, source in zip(self.params, params):
            target[...] = source

    def _check_input(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise UsageError(f"network expects inputs of width {self.sizes[0]}, got shape {x.shape}")
        return x

    def forward(self, x):
        return self.forward_cache(x)[0]

    def forward_cache(self, x):
        """
        Forward pass that keeps the layer activations for backward().

        Returns:
        --------
        tuple
            (output of shape (N, out), cache)
        """
        h = self._check_input(x)
        activations = [h]
        pre = []
        for layer in range(self.n_layers):
            W, b = self.params[2 * layer], self.params[2 * layer + 1]
            z = h @ W + b
            pre.append(z)
            if layer < self.n_layers - 1:
                h = np.maximum(z, 0.0)
            elif self.output == "tanh":
                h = np.tanh(z)
            else:
                h = z
            activations.append(h)
        return h, (activations, pre)

    def backward(self, cache, grad_out):
        """
        Backpropagate d(objective)/d(output).

        Returns:
        --------
        tuple
            (parameter gradients in self.params order, gradient w.r.t. the input)
        """
        activations, pre = cache
        delta = np.asarray(grad_out, dtype=float)
        if self.output == "tanh":
            delta = delta * (1.0 - activations[-1] ** 2)
        grads = [None] * len(self.params)
        for layer in reversed(range(self.n_layers)):
            W = self.params[2 * layer]
            grads[2 * layer] = activations[layer].T @ delta
            grads[2 * layer + 1] = delta.sum(axis=0)
            delta = delta @ W.T
            if layer > 0:
                delta = delta * (pre[layer - 1] > 0.0)
        return grads, delta


class Adam:
    """Adaptive moment estimation (descent on the given gradients)."""

    def __init__(self, params, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0.0:
            raise UsageError(f"learning rate must be > 0, got {lr}")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)

    @property
    def moments(self):
        return self.m + self.v

    def load_moments(self, moments, t):
        if len(moments) != 2 * len(self.m):
            raise UsageError("optimizer moment count does not match the network")
        for target, source in zip(self.m + self.v, moments):
            target[...] = source
        self.t = int(t)


def soft_update(target, online, rate):
    """target <- rate * online + (1 - rate) * target, parameter by parameter."""
    if not (0.0 <= rate <= 1.0):
        raise UsageError(f"soft-update rate must lie in [0, 1], got {rate}")
    if len(target.params) != len(online.params) or any(
        t.shape != o.shape for t, o in zip(target.params, online.params)
    ):
        raise UsageError("soft update between networks of different shapes")
    for t, o in zip(target.params, online.params):
        t[...] = rate * o + (1.0 - rate) * t
