#!/usr/bin/env python3
"""
2NN multilayer perceptron

Two hidden fully-connected ReLU layers followed by a linear output layer,
with a hand-written forward/backward pass, the momentum optimizer step and
the flat-vector algebra used by synchronization and consensus.

All parameters of one model live in a single contiguous float64 vector;
``ModelParams.layers()`` exposes the per-layer views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


class ShapeError(ValueError):
    """Raised when arrays do not match the model's dimensions."""


@dataclass(frozen=True)
class LayerSizes:
    input_dim: int = 784
    hidden_dim: int = 200
    output_dim: int = 10

    def shapes(self) -> list[tuple[int, ...]]:
        d, h, o = self.input_dim, self.hidden_dim, self.output_dim
        return [(d, h), (h,), (h, h), (h,), (h, o), (o,)]

    @property
    def param_count(self) -> int:
        return sum(math.prod(s) for s in self.shapes())

    def fan_ins(self) -> list[int]:
        return [self.input_dim, self.hidden_dim, self.hidden_dim]


MNIST_2NN = LayerSizes()


@dataclass(frozen=True)
class Hyperparams:
    batch_size: int = 10
    learning_rate: float = 0.01
    momentum: float = 0.5


@dataclass(eq=False)
class ModelParams:
    """Full weight/bias set of one device's model (also used for gradients)."""

    vector: np.ndarray
    sizes: LayerSizes = MNIST_2NN

    def __post_init__(self) -> None:
        if self.vector.ndim != 1 or self.vector.shape[0] != self.sizes.param_count:
            raise ShapeError(
                f"parameter vector has shape {self.vector.shape}, "
                f"expected ({self.sizes.param_count},)"
            )

    @classmethod
    def zeros(cls, sizes: LayerSizes = MNIST_2NN) -> "ModelParams":
        return cls(np.zeros(sizes.param_count, dtype=np.float64), sizes)

    @classmethod
    def from_layers(cls, layers: Iterable[np.ndarray], sizes: LayerSizes = MNIST_2NN) -> "ModelParams":
        arrays = list(layers)
        for arr, shape in zip(arrays, sizes.shapes()):
            if arr.shape != shape:
                raise ShapeError(f"layer has shape {arr.shape}, expected {shape}")
        if len(arrays) != len(sizes.shapes()):
            raise ShapeError(f"expected {len(sizes.shapes())} layers, got {len(arrays)}")
        return cls(np.concatenate([np.asarray(a, dtype=np.float64).ravel() for a in arrays]), sizes)

    def layers(self) -> list[np.ndarray]:
        """Views into ``vector``, in order W1, b1, W2, b2, W3, b3."""
        views: list[np.ndarray] = []
        offset = 0
        for shape in self.sizes.shapes():
            size = math.prod(shape)
            views.append(self.vector[offset:offset + size].reshape(shape))
            offset += size
        return views

    @property
    def layer1_weights(self) -> np.ndarray:
        return self.layers()[0]

    @property
    def layer1_bias(self) -> np.ndarray:
        return self.layers()[1]

    @property
    def layer2_weights(self) -> np.ndarray:
        return self.layers()[2]

    @property
    def layer2_bias(self) -> np.ndarray:
        return self.layers()[3]

    @property
    def output_weights(self) -> np.ndarray:
        return self.layers()[4]

    @property
    def output_bias(self) -> np.ndarray:
        return self.layers()[5]

    def copy(self) -> "ModelParams":
        return ModelParams(self.vector.copy(), self.sizes)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.vector).all())

    def distance(self, other: "ModelParams") -> float:
        _check_compatible(self, other)
        return float(np.linalg.norm(self.vector - other.vector))

    def identical_to(self, other: "ModelParams") -> bool:
        return self.sizes == other.sizes and np.array_equal(self.vector, other.vector)


@dataclass(eq=False)
class OptimizerState:
    velocity: ModelParams = field(default_factory=ModelParams.zeros)

    @classmethod
    def initial(cls, sizes: LayerSizes = MNIST_2NN) -> "OptimizerState":
        return cls(ModelParams.zeros(sizes))


def _check_compatible(a: ModelParams, b: ModelParams) -> None:
    if a.sizes != b.sizes:
        raise ShapeError(f"incompatible parameter sets: {a.sizes} vs {b.sizes}")


# ── Initialization ────────────────────────────────────────────────────────────

def init_params(rng: np.random.Generator, sizes: LayerSizes = MNIST_2NN) -> ModelParams:
    """Uniform over ±1/sqrt(fan_in) for every weight and bias of each layer."""
    layers: list[np.ndarray] = []
    shapes = sizes.shapes()
    for layer_idx, fan_in in enumerate(sizes.fan_ins()):
        bound = 1.0 / math.sqrt(fan_in)
        w_shape, b_shape = shapes[2 * layer_idx], shapes[2 * layer_idx + 1]
        layers.append(rng.uniform(-bound, bound, size=w_shape))
        layers.append(rng.uniform(-bound, bound, size=b_shape))
    return ModelParams.from_layers(layers, sizes)


# ── Forward / backward ────────────────────────────────────────────────────────

def _check_inputs(params: ModelParams, inputs: np.ndarray) -> None:
    if inputs.ndim != 2 or inputs.shape[1] != params.sizes.input_dim:
        raise ShapeError(
            f"inputs have shape {inputs.shape}, expected (B, {params.sizes.input_dim})"
        )


def forward(params: ModelParams, inputs: np.ndarray) -> np.ndarray:
    """Class logits, shape (B, output_dim)."""
    _check_inputs(params, inputs)
    w1, b1, w2, b2, w3, b3 = params.layers()
    h1 = np.maximum(inputs @ w1 + b1, 0.0)
    h2 = np.maximum(h1 @ w2 + b2, 0.0)
    return h2 @ w3 + b3


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_grad(params: ModelParams, inputs: np.ndarray, labels: np.ndarray) -> tuple[float, ModelParams]:
    """Mean softmax cross-entropy over the batch and its gradient."""
    if len(labels) == 0:
        raise ValueError("loss_and_grad requires a non-empty batch")
    _check_inputs(params, inputs)
    if inputs.shape[0] != len(labels):
        raise ShapeError(f"{inputs.shape[0]} inputs but {len(labels)} labels")

    w1, b1, w2, b2, w3, b3 = params.layers()
    batch = inputs.shape[0]
    rows = np.arange(batch)

    z1 = inputs @ w1 + b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ w2 + b2
    h2 = np.maximum(z2, 0.0)
    logits = h2 @ w3 + b3

    log_probs = _log_softmax(logits)
    loss = float(-log_probs[rows, labels].mean())

    d_logits = np.exp(log_probs)
    d_logits[rows, labels] -= 1.0
    d_logits /= batch

    g_w3 = h2.T @ d_logits
    g_b3 = d_logits.sum(axis=0)
    d_z2 = (d_logits @ w3.T) * (z2 > 0)
    g_w2 = h1.T @ d_z2
    g_b2 = d_z2.sum(axis=0)
    d_z1 = (d_z2 @ w2.T) * (z1 > 0)
    g_w1 = inputs.T @ d_z1
    g_b1 = d_z1.sum(axis=0)

    grad = ModelParams.from_layers([g_w1, g_b1, g_w2, g_b2, g_w3, g_b3], params.sizes)
    return loss, grad


def momentum_step(
    params: ModelParams, state: OptimizerState, grad: ModelParams, hp: Hyperparams,
) -> tuple[ModelParams, OptimizerState]:
    """v <- mu*v + g, then w <- w - eta*v."""
    _check_compatible(params, grad)
    _check_compatible(params, state.velocity)
    velocity = hp.momentum * state.velocity.vector + grad.vector
    updated = params.vector - hp.learning_rate * velocity
    return ModelParams(updated, params.sizes), OptimizerState(ModelParams(velocity, params.sizes))


# ── Vector algebra ────────────────────────────────────────────────────────────

def param_norm(params: ModelParams) -> float:
    """2-norm of the concatenation of every parameter tensor."""
    return float(np.linalg.norm(params.vector))


def combine(terms: list[tuple[float, ModelParams]]) -> ModelParams:
    """Entrywise linear combination sum(c_i * w_i)."""
    if not terms:
        raise ValueError("combine requires at least one term")
    first_coef, first = terms[0]
    out = first_coef * first.vector
    for coef, params in terms[1:]:
        _check_compatible(first, params)
        out = out + coef * params.vector
    return ModelParams(out, first.sizes)


# ── Evaluation ────────────────────────────────────────────────────────────────

def predict(params: ModelParams, inputs: np.ndarray, chunk: int = 2000) -> np.ndarray:
    """Argmax class per sample; np.argmax resolves ties to the lowest index."""
    out = np.empty(inputs.shape[0], dtype=np.int64)
    for start in range(0, inputs.shape[0], chunk):
        out[start:start + chunk] = forward(params, inputs[start:start + chunk]).argmax(axis=1)
    return out


def evaluate_accuracy(params: ModelParams, inputs: np.ndarray, labels: np.ndarray, chunk: int = 2000) -> float:
    if len(labels) == 0:
        raise ValueError("evaluate_accuracy requires a non-empty test set")
    return float(np.mean(predict(params, inputs, chunk) == labels))


def mean_loss(params: ModelParams, inputs: np.ndarray, labels: np.ndarray, chunk: int = 2000) -> float:
    """Mean cross-entropy over a dataset, evaluated in chunks."""
    if len(labels) == 0:
        raise ValueError("mean_loss requires a non-empty dataset")
    total = 0.0
    for start in range(0, inputs.shape[0], chunk):
        logits = forward(params, inputs[start:start + chunk])
        log_probs = _log_softmax(logits)
        y = labels[start:start + chunk]
        total -= float(log_probs[np.arange(len(y)), y].sum())
    return total / len(labels)
