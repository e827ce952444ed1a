#!/usr/bin/env python3

from __future__ import annotations

import math

import numpy as np
import pytest

import conftest  # noqa: F401  (sys.path setup)
from core.model import (
    MNIST_2NN,
    Hyperparams,
    LayerSizes,
    ModelParams,
    OptimizerState,
    ShapeError,
    combine,
    evaluate_accuracy,
    forward,
    init_params,
    loss_and_grad,
    mean_loss,
    momentum_step,
    param_norm,
    predict,
)

SMALL = LayerSizes(input_dim=6, hidden_dim=5, output_dim=3)


def test_mnist_2nn_parameter_count():
    assert MNIST_2NN.param_count == 199_210
    assert ModelParams.zeros().vector.shape == (199_210,)


def test_layer_views_share_the_flat_vector():
    params = ModelParams.zeros(SMALL)
    params.layer1_weights[0, 0] = 3.0
    params.output_bias[-1] = -2.0
    assert params.vector[0] == 3.0
    assert params.vector[-1] == -2.0
    assert [layer.shape for layer in params.layers()] == SMALL.shapes()


def test_init_bounds_follow_fan_in():
    params = init_params(np.random.default_rng(0))
    w1, b1, w2, b2, w3, b3 = params.layers()
    assert np.abs(w1).max() <= 1 / math.sqrt(784)
    assert np.abs(b1).max() <= 1 / math.sqrt(784)
    assert np.abs(w2).max() <= 1 / math.sqrt(200)
    assert np.abs(b3).max() <= 1 / math.sqrt(200)
    assert np.abs(w3).max() > 0.9 / math.sqrt(200)


def test_init_is_reproducible_from_seed():
    a = init_params(np.random.default_rng(7), SMALL)
    b = init_params(np.random.default_rng(7), SMALL)
    c = init_params(np.random.default_rng(8), SMALL)
    assert a.identical_to(b)
    assert not a.identical_to(c)


def test_wrong_vector_length_is_rejected():
    with pytest.raises(ShapeError):
        ModelParams(np.zeros(10), SMALL)


def test_forward_rejects_wrong_input_width():
    params = init_params(np.random.default_rng(0), SMALL)
    with pytest.raises(ShapeError):
        forward(params, np.zeros((2, 7)))


def test_zero_model_loss_is_log_of_class_count():
    inputs = np.random.default_rng(1).random((4, 6))
    loss, grad = loss_and_grad(ModelParams.zeros(SMALL), inputs, np.array([0, 1, 2, 0]))
    assert loss == pytest.approx(math.log(3))
    assert grad.is_finite()


def test_empty_batch_is_an_error():
    with pytest.raises(ValueError):
        loss_and_grad(ModelParams.zeros(SMALL), np.zeros((0, 6)), np.array([], dtype=np.int64))


def relu_pattern(params: ModelParams, inputs: np.ndarray) -> np.ndarray:
    w1, b1, w2, b2, _, _ = params.layers()
    z1 = inputs @ w1 + b1
    z2 = np.maximum(z1, 0) @ w2 + b2
    return np.concatenate([(z1 > 0).ravel(), (z2 > 0).ravel()])


def central_difference(params: ModelParams, inputs, labels, j: int, h: float) -> float | None:
    """None when the perturbation flips a ReLU, where the loss is not differentiable."""
    plus, minus = params.copy(), params.copy()
    plus.vector[j] += h
    minus.vector[j] -= h
    base = relu_pattern(params, inputs)
    if not (np.array_equal(relu_pattern(plus, inputs), base) and np.array_equal(relu_pattern(minus, inputs), base)):
        return None
    return (loss_and_grad(plus, inputs, labels)[0] - loss_and_grad(minus, inputs, labels)[0]) / (2 * h)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    params = init_params(rng, SMALL)
    inputs = rng.random((5, 6))
    labels = np.array([0, 1, 2, 1, 0])
    _, grad = loss_and_grad(params, inputs, labels)

    checked = 0
    for j in range(SMALL.param_count):
        numeric = central_difference(params, inputs, labels, j, 1e-6)
        if numeric is None:
            continue
        analytic = grad.vector[j]
        diff = abs(analytic - numeric)
        assert diff < 1e-7 or diff / max(abs(analytic), abs(numeric), 1e-6) < 1e-4
        checked += 1
    assert checked > SMALL.param_count // 2


def test_full_size_gradient_matches_finite_differences():
    rng = np.random.default_rng(17)
    checked = 0
    for _ in range(10):
        params = init_params(rng, MNIST_2NN)
        inputs = rng.random((10, MNIST_2NN.input_dim))
        labels = rng.integers(0, MNIST_2NN.output_dim, size=10)
        _, grad = loss_and_grad(params, inputs, labels)
        for j in rng.choice(MNIST_2NN.param_count, size=20, replace=False):
            numeric = central_difference(params, inputs, labels, int(j), 1e-5)
            if numeric is None:
                continue
            analytic = grad.vector[j]
            diff = abs(analytic - numeric)
            assert diff < 1e-9 or diff / max(abs(analytic), abs(numeric)) < 1e-4, f"coordinate {j}"
            checked += 1
    assert checked >= 100


def test_momentum_step_updates_velocity_then_weights():
    params = ModelParams(np.ones(SMALL.param_count), SMALL)
    state = OptimizerState(ModelParams(np.full(SMALL.param_count, 2.0), SMALL))
    grad = ModelParams(np.full(SMALL.param_count, 0.5), SMALL)
    hp = Hyperparams(batch_size=1, learning_rate=0.1, momentum=0.5)

    new_params, new_state = momentum_step(params, state, grad, hp)
    assert np.allclose(new_state.velocity.vector, 1.5)
    assert np.allclose(new_params.vector, 1.0 - 0.15)
    assert np.allclose(params.vector, 1.0)


def test_momentum_zero_is_plain_sgd():
    params = ModelParams(np.ones(SMALL.param_count), SMALL)
    grad = ModelParams(np.full(SMALL.param_count, 0.25), SMALL)
    new_params, _ = momentum_step(params, OptimizerState.initial(SMALL), grad, Hyperparams(10, 0.2, 0.0))
    assert np.allclose(new_params.vector, 0.95)


def test_param_norm_and_combine():
    a = ModelParams(np.full(SMALL.param_count, 1.0), SMALL)
    b = ModelParams(np.full(SMALL.param_count, 3.0), SMALL)
    assert param_norm(a) == pytest.approx(math.sqrt(SMALL.param_count))
    mixed = combine([(0.25, a), (0.75, b)])
    assert np.allclose(mixed.vector, 2.5)
    with pytest.raises(ValueError):
        combine([])
    with pytest.raises(ShapeError):
        combine([(1.0, a), (1.0, ModelParams.zeros())])


def test_predict_breaks_ties_to_lowest_class():
    inputs = np.random.default_rng(0).random((3, 6))
    assert predict(ModelParams.zeros(SMALL), inputs).tolist() == [0, 0, 0]
    labels = np.array([0, 1, 0])
    assert evaluate_accuracy(ModelParams.zeros(SMALL), inputs, labels) == pytest.approx(2 / 3)


def test_mean_loss_matches_batch_loss_across_chunks():
    rng = np.random.default_rng(5)
    params = init_params(rng, SMALL)
    inputs = rng.random((7, 6))
    labels = rng.integers(0, 3, size=7)
    batch_loss, _ = loss_and_grad(params, inputs, labels)
    assert mean_loss(params, inputs, labels, chunk=3) == pytest.approx(batch_loss)


def test_training_reduces_loss_on_separable_data():
    rng = np.random.default_rng(2)
    params = init_params(rng, SMALL)
    labels = rng.integers(0, 3, size=60)
    inputs = 0.1 * rng.random((60, 6))
    inputs[np.arange(60), labels] += 1.0
    state = OptimizerState.initial(SMALL)
    hp = Hyperparams(batch_size=10, learning_rate=0.1, momentum=0.5)

    before = mean_loss(params, inputs, labels)
    for _ in range(30):
        for start in range(0, 60, 10):
            _, grad = loss_and_grad(params, inputs[start:start + 10], labels[start:start + 10])
            params, state = momentum_step(params, state, grad, hp)
    assert mean_loss(params, inputs, labels) < before
