"""Minimal fully connected network with hand-rolled backpropagation.

tanh on hidden layers, identity output. Weights are (fan_in, fan_out) so a
batch forward pass is ``X @ W + b``. Initialization is uniform in
+-sqrt(6 / (fan_in + fan_out)) from a seeded generator, and the paired
optimizer is plain gradient descent with momentum and an optional step-decay
schedule — everything deterministic given the seed.
"""

from __future__ import annotations

import numpy as np

__all__ = ["FeedForwardNet", "MomentumSGD"]


class FeedForwardNet:
    """Feed-forward net: tanh hidden layers, linear output."""

    def __init__(self, layer_sizes, seed=0):
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"layer_sizes needs >= 2 positive entries, got {layer_sizes}")
        self.layer_sizes = sizes
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self):
        """Flat list of parameter arrays (weights then bias per layer)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def forward(self, x):
        """Batch forward pass; accepts (n, in) or a single (in,) vector."""
        y, _ = self.forward_cached(np.asarray(x, dtype=float))
        return y

    def forward_cached(self, x):
        """Forward pass keeping activations for :meth:`backward`."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.n_inputs:
            raise ValueError(f"input dim {a.shape[1]} != expected {self.n_inputs}")
        activations = [a]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ w + b
            if i < last:
                a = np.tanh(a)
            activations.append(a)
        return (a[0] if single else a), (activations, single)

    def backward(self, cache, d_out):
        """Gradients of a scalar loss given d(loss)/d(output).

        Returns
        -------
        grads : list matching :meth:`parameters` order
        d_input : gradient w.r.t. the network input
        """
        activations, single = cache
        d = np.asarray(d_out, dtype=float)
        if single:
            d = d[None, :]
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            if i < len(self.weights) - 1:
                d = d * (1.0 - activations[i + 1] ** 2)  # through tanh
            grads_w[i] = activations[i].T @ d
            grads_b[i] = d.sum(axis=0)
            d = d @ self.weights[i].T
        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads.extend((gw, gb))
        return grads, (d[0] if single else d)

    def copy_parameters(self):
        return [p.copy() for p in self.parameters()]

    def set_parameters(self, params):
        for target, source in zip(self.parameters(), params):
            target[...] = source

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc) -> "FeedForwardNet":
        net = cls(doc["layer_sizes"])
        net.weights = [np.asarray(w, dtype=float) for w in doc["weights"]]
        net.biases = [np.asarray(b, dtype=float) for b in doc["biases"]]
        return net


class MomentumSGD:
    """Gradient descent with momentum and step decay, updating in place."""

    def __init__(self, params, lr=0.05, momentum=0.9, decay_every=None, decay_factor=0.5):
        self.params = list(params)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.decay_every = decay_every
        self.decay_factor = float(decay_factor)
        self.velocity = [np.zeros_like(p) for p in self.params]
        self._steps = 0

    def step(self, grads):
        for p, v, g in zip(self.params, self.velocity, grads):
            v *= self.momentum
            v -= self.lr * g
            p += v
        self._steps += 1
        if self.decay_every and self._steps % self.decay_every == 0:
            self.lr *= self.decay_factor

    def reset_velocity(self):
        for v in self.velocity:
            v[...] = 0.0
