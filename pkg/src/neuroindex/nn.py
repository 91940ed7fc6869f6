"""Layered feedforward networks written against numpy.

Each layer computes ``a = f(W @ x + b)``. Only the feedforward topology is
supported: the output of layer ``j`` feeds layer ``j + 1`` and nothing else.
All arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, NonFiniteLoss

ACTIVATIONS = ("tanh", "logistic", "identity")


def _apply(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "logistic":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return z


def _derivative(name: str, a: np.ndarray) -> np.ndarray:
    # expressed through the activation output, which the cache already holds
    if name == "tanh":
        return 1.0 - a * a
    if name == "logistic":
        return a * (1.0 - a)
    return np.ones_like(a)


@dataclass(frozen=True)
class NetworkConfig:
    layer_sizes: tuple[int, ...]
    hidden_activation: str = "tanh"
    output_activation: str = "identity"
    connection_offset: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(n) for n in self.layer_sizes))

    def validate(self) -> None:
        if len(self.layer_sizes) < 2:
            raise InvalidConfig("layer_sizes needs an input and an output size")
        if any(n < 1 for n in self.layer_sizes):
            raise InvalidConfig(f"layer sizes must be >= 1, got {list(self.layer_sizes)}")
        if self.connection_offset != 1:
            raise InvalidConfig(
                f"connection offset {self.connection_offset} unsupported; only feedforward (1) is implemented"
            )
        for act in (self.hidden_activation, self.output_activation):
            if act not in ACTIVATIONS:
                raise InvalidConfig(f"unknown activation {act!r}; choose from {ACTIVATIONS}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must fit in an unsigned 64-bit integer")


@dataclass
class Network:
    config: NetworkConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.config.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.config.layer_sizes[-1]

    def activation(self, layer: int) -> str:
        c = self.config
        return c.output_activation if layer == self.depth - 1 else c.hidden_activation

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self) -> np.ndarray:
        """Flat parameter vector: per layer, W row-major then b."""
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)])

    def set_params(self, theta: np.ndarray) -> None:
        off = 0
        for w, b in zip(self.weights, self.biases):
            w[...] = theta[off : off + w.size].reshape(w.shape)
            off += w.size
            b[...] = theta[off : off + b.size]
            off += b.size

    def copy(self) -> "Network":
        return Network(self.config, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.isfinite(w).all() and np.isfinite(b).all() for w, b in zip(self.weights, self.biases))

    def equals(self, other: "Network") -> bool:
        """Bitwise equality of config and parameters."""
        return self.config == other.config and all(
            np.array_equal(a, b) for a, b in zip(self.weights + self.biases, other.weights + other.biases)
        )


def init_network(config: NetworkConfig) -> Network:
    config.validate()
    rng = np.random.default_rng(config.seed)
    weights, biases = [], []
    for n_in, n_out in zip(config.layer_sizes[:-1], config.layer_sizes[1:]):
        r = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-r, r, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return Network(config, weights, biases)


def forward(net: Network, x) -> tuple[np.ndarray, list[np.ndarray]]:
    """Evaluate ``net`` on one input vector or a batch of row vectors.

    Returns ``(y, cache)`` where ``cache[j]`` is the activation entering
    layer ``j`` (``cache[0]`` is the input, ``cache[-1]`` equals ``y``).
    """
    a = np.asarray(x, dtype=np.float64)
    if a.shape[-1] != net.input_dim:
        raise DimensionMismatch(f"input has dimension {a.shape[-1]}, network expects {net.input_dim}")
    cache = [a]
    for j, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = _apply(net.activation(j), a @ w.T + b)
        cache.append(a)
    return a, cache


def _as_batch(net: Network, batch) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(batch, tuple) and len(batch) == 2 and np.ndim(batch[0]) == 2:
        X, T = batch
    else:
        X = np.array([np.asarray(x, dtype=np.float64) for x, _ in batch])
        T = np.array([np.asarray(t, dtype=np.float64) for _, t in batch])
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise DimensionMismatch(f"inputs must be (batch, {net.input_dim}), got {X.shape}")
    if T.shape != (X.shape[0], net.output_dim):
        raise DimensionMismatch(f"targets must be ({X.shape[0]}, {net.output_dim}), got {T.shape}")
    return X, T


def loss(net: Network, X: np.ndarray, T: np.ndarray) -> float:
    y, _ = forward(net, X)
    return float(np.mean(np.sum((y - T) ** 2, axis=1)))


def backprop(net: Network, X: np.ndarray, T: np.ndarray):
    """Loss ``mean_batch sum_out (y - t)^2`` and its gradients.

    Returns ``(loss, grad_weights, grad_biases)``.
    """
    y, cache = forward(net, X)
    diff = y - T
    value = float(np.mean(np.sum(diff * diff, axis=1)))
    delta = (2.0 / X.shape[0]) * diff * _derivative(net.activation(net.depth - 1), y)
    gw: list[np.ndarray] = [None] * net.depth  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * net.depth  # type: ignore[list-item]
    for j in range(net.depth - 1, -1, -1):
        gw[j] = delta.T @ cache[j]
        gb[j] = delta.sum(axis=0)
        if j:
            delta = (delta @ net.weights[j]) * _derivative(net.activation(j - 1), cache[j])
    return value, gw, gb


def train_step(net: Network, batch, lr: float) -> float:
    """One gradient-descent step on the batch; returns the pre-update loss."""
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    X, T = _as_batch(net, batch)
    with np.errstate(over="ignore", invalid="ignore"):
        value, gw, gb = backprop(net, X, T)
        if not np.isfinite(value):
            raise NonFiniteLoss(f"loss is {value}")
        if lr:
            for w, b, dw, db in zip(net.weights, net.biases, gw, gb):
                w -= lr * dw
                b -= lr * db
    if lr and not net.is_finite():
        raise NonFiniteLoss("parameters became non-finite after update")
    return value


def gradient_check(net: Network, sample, epsilon: float = 1e-5) -> float:
    """Max relative error between backprop and central differences."""
    x, t = sample
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    T = np.atleast_2d(np.asarray(t, dtype=np.float64))
    _, gw, gb = backprop(net, X, T)
    analytic = np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(gw, gb)])
    probe = net.copy()
    theta = net.params()
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        shifted = theta.copy()
        shifted[i] = theta[i] + epsilon
        probe.set_params(shifted)
        up = loss(probe, X, T)
        shifted[i] = theta[i] - epsilon
        probe.set_params(shifted)
        down = loss(probe, X, T)
        numeric[i] = (up - down) / (2 * epsilon)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric) / denom))


def output_jacobian(net: Network, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outputs and their Jacobian with respect to the flat parameter vector.

    Row ``n * M + o`` of the Jacobian is ``d y[n, o] / d theta``, matching
    ``y.ravel()``. Computed by one backward pass per output channel.
    """
    y, cache = forward(net, X)
    n, m = y.shape
    out_deriv = _derivative(net.activation(net.depth - 1), y)
    blocks = np.empty((n, m, net.n_params))
    for o in range(m):
        delta = np.zeros_like(y)
        delta[:, o] = out_deriv[:, o]
        pieces = []
        for j in range(net.depth - 1, -1, -1):
            a_in = cache[j]
            pieces.append(delta)  # bias part, prepended below after reversal
            pieces.append((delta[:, :, None] * a_in[:, None, :]).reshape(n, -1))
            if j:
                delta = (delta @ net.weights[j]) * _derivative(net.activation(j - 1), cache[j])
        # pieces is [b_J, W_J, ..., b_1, W_1]; parameters are laid out W_1, b_1, ...
        blocks[:, o, :] = np.concatenate(pieces[::-1], axis=1)
    return y, blocks.reshape(n * m, -1)


@dataclass
class LevenbergMarquardt:
    """Damped Gauss-Newton training on the summed squared error.

    The Jacobian comes from :func:`output_jacobian`. Each :meth:`step` tries
    increasing damping until the error drops or ``max_damping`` is exceeded.
    """

    damping: float = 1e-2
    increase: float = 4.0
    decrease: float = 3.0
    min_damping: float = 1e-12
    max_damping: float = 1e10
    stalled: bool = field(default=False, init=False)

    def step(self, net: Network, X: np.ndarray, T: np.ndarray) -> float:
        """Update ``net`` in place; returns the pre-update mean loss."""
        y, J = output_jacobian(net, X)
        r = (y - T).ravel()
        sse = float(r @ r)
        if not np.isfinite(sse):
            raise NonFiniteLoss(f"loss is {sse}")
        theta = net.params()
        rows, cols = J.shape
        small = J @ J.T if rows <= cols else J.T @ J
        rhs = r if rows <= cols else J.T @ r
        eye = np.eye(small.shape[0])
        while True:
            solved = np.linalg.solve(small + self.damping * eye, rhs)
            delta = -(J.T @ solved) if rows <= cols else -solved
            net.set_params(theta + delta)
            trial = float(np.sum((forward(net, X)[0] - T) ** 2))
            if np.isfinite(trial) and trial < sse:
                self.damping = max(self.damping / self.decrease, self.min_damping)
                self.stalled = False
                break
            self.damping *= self.increase
            if self.damping > self.max_damping:
                net.set_params(theta)
                self.stalled = True
                break
        return sse / X.shape[0]

