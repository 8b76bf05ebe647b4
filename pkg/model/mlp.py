"""Dense feed-forward network with a sum-of-squares loss.

Weights live in one flat float64 vector: for each layer, W (in_dim x out_dim,
row-major) followed by b (out_dim). Residuals are flattened sample-major, so
the residual for sample s and output component c sits at index s*C + c.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import expit

from errors import CapacityError, DimensionError
from numkit.dense_ops import DenseMatrix, DenseVector

log_event: Callable[[str, str], None] = lambda msg, tag="M": None


def set_logger(logger_func: Callable[[str, str], None]) -> None:
    global log_event
    log_event = logger_func


ACTIVATIONS = ("relu", "sigmoid", "softmax", "identity")

# Dense Jacobians above this many entries are refused
JACOBIAN_CAPACITY = 10_000_000


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "identity"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise DimensionError(f"layer dims must be >= 1, got {self.in_dim}->{self.out_dim}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}")

    @property
    def n_weights(self) -> int:
        return (self.in_dim + 1) * self.out_dim


def validate_specs(specs: Sequence[LayerSpec]) -> tuple[LayerSpec, ...]:
    specs = tuple(specs)
    if not specs:
        raise DimensionError("a network needs at least one layer")
    for i, (prev, nxt) in enumerate(zip(specs, specs[1:])):
        if prev.out_dim != nxt.in_dim:
            raise DimensionError(
                f"layer chain broken between layer {i} and {i + 1}: {prev.out_dim} != {nxt.in_dim}"
            )
    for i, spec in enumerate(specs[:-1]):
        if spec.activation == "softmax":
            raise DimensionError(f"softmax only allowed on the final layer (found on layer {i})")
    return specs


def layers_from_sizes(sizes: Sequence[int], activations: Sequence[str]) -> tuple[LayerSpec, ...]:
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2:
        raise DimensionError("need at least an input and an output size")
    if len(activations) != len(sizes) - 1:
        raise DimensionError(f"{len(sizes) - 1} layers but {len(activations)} activations")
    return validate_specs(
        LayerSpec(i, o, a) for i, o, a in zip(sizes[:-1], sizes[1:], activations)
    )


def iris_layers() -> tuple[LayerSpec, ...]:
    # 5*10 + 11*10 + 11*3 = 193 weights
    return layers_from_sizes([4, 10, 10, 3], ["relu", "relu", "softmax"])


def autoencoder_layers(pixels: int, code: int) -> tuple[LayerSpec, ...]:
    return layers_from_sizes([pixels, code, pixels], ["relu", "sigmoid"])


@dataclass(eq=False)
class Mlp:
    layers: tuple[LayerSpec, ...]
    weights: DenseVector = field(repr=False)

    def __post_init__(self):
        self.layers = validate_specs(self.layers)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.n_weights,):
            raise DimensionError(f"expected {self.n_weights} weights, got shape {self.weights.shape}")

    @property
    def n_weights(self) -> int:
        return sum(spec.n_weights for spec in self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def unpack(self) -> Iterator[tuple[LayerSpec, DenseMatrix, DenseVector]]:
        """Yield (spec, W, b) views into the flat weight vector."""
        offset = 0
        for spec in self.layers:
            w_size = spec.in_dim * spec.out_dim
            W = self.weights[offset:offset + w_size].reshape(spec.in_dim, spec.out_dim)
            offset += w_size
            b = self.weights[offset:offset + spec.out_dim]
            offset += spec.out_dim
            yield spec, W, b

    def with_weights(self, weights) -> "Mlp":
        return Mlp(self.layers, np.array(weights, dtype=np.float64, copy=True))



@dataclass(frozen=True, eq=False)
class BatchEval:
    residuals: DenseVector
    loss: float
    gradient: DenseVector

    @property
    def L(self) -> int:
        return int(self.residuals.shape[0])


def init_weights(specs: Sequence[LayerSpec], seed) -> Mlp:
    """Glorot-uniform W, zero biases."""
    specs = validate_specs(specs)
    rng = np.random.default_rng(seed)
    chunks = []
    for spec in specs:
        limit = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
        chunks.append(rng.uniform(-limit, limit, size=spec.in_dim * spec.out_dim))
        chunks.append(np.zeros(spec.out_dim))
    mlp = Mlp(specs, np.concatenate(chunks))
    log_event(f"initialized {'->'.join(str(s.in_dim) for s in specs)}->{specs[-1].out_dim} (n={mlp.n_weights})", "M")
    return mlp


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return expit(z)
    if kind == "softmax":
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)
    return z


def _activation_backward(kind: str, z: np.ndarray, a: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return upstream * (z > 0.0)
    if kind == "sigmoid":
        return upstream * a * (1.0 - a)
    if kind == "softmax":
        # full softmax Jacobian, row by row
        return a * (upstream - np.sum(upstream * a, axis=1, keepdims=True))
    return upstream


def _check_features(m: Mlp, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.input_dim:
        raise DimensionError(f"features must be (samples, {m.input_dim}), got {X.shape}")
    return X


def _forward_cached(m: Mlp, X: np.ndarray):
    cache = []
    a = X
    for spec, W, b in m.unpack():
        z = a @ W + b
        out = _activate(spec.activation, z)
        cache.append((a, z, out))
        a = out
    return a, cache


def _backward(m: Mlp, cache, upstream: np.ndarray, per_row: bool) -> np.ndarray:
    """Backpropagate `upstream` (dLoss/dOutput).

    Returns the summed gradient (n,) or, with per_row, one gradient per row (rows, n).
    """
    layers = list(m.unpack())
    grads = []
    G = upstream
    for (spec, W, _), (a_prev, z, out) in zip(reversed(layers), reversed(cache)):
        dz = _activation_backward(spec.activation, z, out, G)
        if per_row:
            dW = np.einsum("ri,rj->rij", a_prev, dz).reshape(dz.shape[0], -1)
            grads.append(np.concatenate([dW, dz], axis=1))
        else:
            grads.append(np.concatenate([(a_prev.T @ dz).ravel(), dz.sum(axis=0)]))
        G = dz @ W.T
    grads.reverse()
    return np.concatenate(grads, axis=1 if per_row else 0)


def forward(m: Mlp, X) -> np.ndarray:
    X = _check_features(m, X)
    out, _ = _forward_cached(m, X)
    return out


def _check_targets(m: Mlp, X: np.ndarray, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape != (X.shape[0], m.output_dim):
        raise DimensionError(f"targets must be ({X.shape[0]}, {m.output_dim}), got {Y.shape}")
    return Y


def evaluate_batch(m: Mlp, X, Y) -> BatchEval:
    X = _check_features(m, X)
    Y = _check_targets(m, X, Y)
    pred, cache = _forward_cached(m, X)
    R = pred - Y
    residuals = R.ravel()
    L = residuals.shape[0]
    loss = float(np.dot(residuals, residuals) / L)
    gradient = _backward(m, cache, (2.0 / L) * R, per_row=False)
    return BatchEval(residuals=residuals, loss=loss, gradient=gradient)


def batch_loss(m: Mlp, X, Y) -> float:
    X = _check_features(m, X)
    Y = _check_targets(m, X, Y)
    r = (forward(m, X) - Y).ravel()
    return float(np.dot(r, r) / r.shape[0])


def exact_jacobian(m: Mlp, X, Y) -> DenseMatrix:
    """n x L matrix whose column l is the weight-gradient of residual l."""
    X = _check_features(m, X)
    Y = _check_targets(m, X, Y)
    S, C = Y.shape
    L = S * C
    n = m.n_weights
    if n * L > JACOBIAN_CAPACITY:
        raise CapacityError(f"dense Jacobian {n}x{L} exceeds {JACOBIAN_CAPACITY} entries")
    # each sample repeated once per output component; seeding row s*C+c with e_c
    X_rep = np.repeat(X, C, axis=0)
    _, cache = _forward_cached(m, X_rep)
    seeds = np.tile(np.eye(C), (S, 1))
    return _backward(m, cache, seeds, per_row=True).T.copy()
