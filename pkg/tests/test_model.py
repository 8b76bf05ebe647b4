import numpy as np
import pytest

import model.mlp as mlp
from errors import CapacityError, DimensionError
from model.mlp import (
    LayerSpec,
    Mlp,
    batch_loss,
    evaluate_batch,
    exact_jacobian,
    forward,
    init_weights,
    iris_layers,
    layers_from_sizes,
)
from oracle.reference import FdSpec, fd_gradient


def _batch(rng, m, samples, one_hot=False):
    X = rng.normal(size=(samples, m.input_dim))
    if one_hot:
        Y = np.eye(m.output_dim)[rng.integers(0, m.output_dim, size=samples)]
    else:
        Y = rng.uniform(size=(samples, m.output_dim))
    return X, Y


def test_iris_net_has_193_weights():
    m = init_weights(iris_layers(), seed=0)
    assert m.n_weights == 193
    assert m.weights.shape == (193,)


def test_init_weights_small_and_deterministic():
    m = init_weights([LayerSpec(2, 1, "identity")], seed=3)
    assert m.n_weights == 3
    assert m.weights[2] == 0.0
    again = init_weights([LayerSpec(2, 1, "identity")], seed=3)
    np.testing.assert_array_equal(m.weights, again.weights)


def test_init_weights_glorot_bounds():
    m = init_weights(iris_layers(), seed=11)
    for spec, W, b in m.unpack():
        limit = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
        assert np.all(np.abs(W) <= limit)
        np.testing.assert_array_equal(b, 0.0)


def test_layer_validation():
    with pytest.raises(DimensionError):
        layers_from_sizes([4, 3, 2], ["softmax", "relu"])
    with pytest.raises(DimensionError):
        Mlp((LayerSpec(4, 3), LayerSpec(2, 1)), np.zeros(15 + 3))
    with pytest.raises(DimensionError):
        Mlp((LayerSpec(2, 1),), np.zeros(4))
    with pytest.raises(ValueError):
        LayerSpec(2, 2, "tanh")


def test_forward_examples():
    zero = Mlp((LayerSpec(3, 2, "identity"),), np.zeros(8))
    np.testing.assert_array_equal(forward(zero, np.ones((4, 3))), np.zeros((4, 2)))

    single = Mlp((LayerSpec(2, 1, "identity"),), np.array([1.0, 1.0, 0.0]))
    np.testing.assert_array_equal(forward(single, [[2.0, 3.0]]), [[5.0]])

    soft = Mlp((LayerSpec(2, 3, "softmax"),), np.zeros(9))
    np.testing.assert_allclose(forward(soft, np.ones((2, 2))), np.full((2, 3), 1.0 / 3.0), rtol=0, atol=1e-15)

    with pytest.raises(DimensionError):
        forward(single, np.ones((1, 3)))


def test_output_ranges(rng):
    m = init_weights(iris_layers(), seed=5)
    out = forward(m, rng.normal(size=(20, 4)))
    np.testing.assert_allclose(out.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    relu = init_weights(layers_from_sizes([4, 6], ["relu"]), seed=5)
    assert np.all(forward(relu, rng.normal(size=(20, 4))) >= 0.0)


def test_evaluate_batch_hand_derivative():
    # m(w; x) = w x + b with w=1, b=0 on (x=2, y=0)
    m = Mlp((LayerSpec(1, 1, "identity"),), np.array([1.0, 0.0]))
    ev = evaluate_batch(m, [[2.0]], [[0.0]])
    np.testing.assert_array_equal(ev.residuals, [2.0])
    assert ev.loss == 4.0
    np.testing.assert_array_equal(ev.gradient, [8.0, 4.0])


def test_evaluate_batch_perfect_fit(rng):
    m = init_weights(layers_from_sizes([3, 4, 2], ["sigmoid", "identity"]), seed=1)
    X = rng.normal(size=(5, 3))
    ev = evaluate_batch(m, X, forward(m, X))
    np.testing.assert_array_equal(ev.residuals, 0.0)
    assert ev.loss == 0.0
    np.testing.assert_array_equal(ev.gradient, 0.0)


def test_residuals_are_sample_major(rng):
    m = init_weights(iris_layers(), seed=2)
    X, Y = _batch(rng, m, 6, one_hot=True)
    ev = evaluate_batch(m, X, Y)
    assert ev.L == 18
    np.testing.assert_array_equal(ev.residuals.reshape(6, 3), forward(m, X) - Y)
    assert ev.loss == pytest.approx(float(ev.residuals @ ev.residuals) / 18, rel=1e-12)
    assert batch_loss(m, X, Y) == pytest.approx(ev.loss, rel=1e-12)


def test_evaluate_batch_deterministic(rng):
    m = init_weights(iris_layers(), seed=4)
    X, Y = _batch(rng, m, 8, one_hot=True)
    a, b = evaluate_batch(m, X, Y), evaluate_batch(m, X, Y)
    np.testing.assert_array_equal(a.gradient, b.gradient)
    assert a.loss == b.loss


@pytest.mark.parametrize(
    "sizes, activations, one_hot",
    [
        ([4, 10, 10, 3], ["relu", "relu", "softmax"], True),
        ([5, 7, 4], ["sigmoid", "identity"], False),
        ([3, 6, 6, 3], ["relu", "sigmoid", "softmax"], True),
        ([9, 4, 9], ["relu", "sigmoid"], False),
    ],
)
def test_gradient_matches_finite_differences(rng, sizes, activations, one_hot):
    m = init_weights(layers_from_sizes(sizes, activations), seed=7)
    m.weights[:] += rng.normal(scale=0.1, size=m.n_weights)
    X, Y = _batch(rng, m, 12, one_hot)
    spec = FdSpec(h=1e-6, sample_size=200, seed=1)
    fd = fd_gradient(lambda w: batch_loss(m.with_weights(w), X, Y), m.weights, spec)
    bp = evaluate_batch(m, X, Y).gradient[spec.coordinates(m.n_weights)]
    assert np.linalg.norm(bp - fd) / np.linalg.norm(fd) < 1e-5


def test_exact_jacobian_linear_model(rng):
    m = init_weights([LayerSpec(3, 1, "identity")], seed=0)
    X = rng.normal(size=(5, 3))
    J = exact_jacobian(m, X, np.zeros((5, 1)))
    assert J.shape == (4, 5)
    np.testing.assert_array_equal(J[:3], X.T)
    np.testing.assert_array_equal(J[3], 1.0)


@pytest.mark.parametrize(
    "sizes, activations",
    [([4, 10, 10, 3], ["relu", "relu", "softmax"]), ([6, 5, 6], ["relu", "sigmoid"]), ([2, 3], ["identity"])],
)
def test_exact_jacobian_consistent_with_gradient(rng, sizes, activations):
    m = init_weights(layers_from_sizes(sizes, activations), seed=9)
    X, Y = _batch(rng, m, 32, one_hot=activations[-1] == "softmax")
    ev = evaluate_batch(m, X, Y)
    J = exact_jacobian(m, X, Y)
    assert J.shape == (m.n_weights, ev.L)
    err = np.linalg.norm((2.0 / ev.L) * J @ ev.residuals - ev.gradient)
    assert err <= 1e-9 * (1.0 + np.linalg.norm(ev.gradient))


def test_iris_jacobian_shape(rng):
    m = init_weights(iris_layers(), seed=0)
    X, Y = _batch(rng, m, 32, one_hot=True)
    assert exact_jacobian(m, X, Y).shape == (193, 96)


def test_exact_jacobian_zero_residual(rng):
    m = init_weights(layers_from_sizes([3, 4, 2], ["relu", "identity"]), seed=1)
    X = rng.normal(size=(4, 3))
    Y = forward(m, X)
    J = exact_jacobian(m, X, Y)
    np.testing.assert_array_equal((2.0 / 8) * J @ evaluate_batch(m, X, Y).residuals, 0.0)


def test_exact_jacobian_capacity_guard(rng, monkeypatch):
    monkeypatch.setattr(mlp, "JACOBIAN_CAPACITY", 100)
    m = init_weights(iris_layers(), seed=0)
    X, Y = _batch(rng, m, 2, one_hot=True)
    with pytest.raises(CapacityError):
        exact_jacobian(m, X, Y)
