import numpy as np
import pytest

from errors import DegenerateInputError, DimensionError, SingularMatrixError
from numkit import dense_solve, dot, ewise


def test_ewise_examples():
    np.testing.assert_array_equal(ewise("mul", [1.0, 2.0], [3.0, 4.0]), [3.0, 8.0])
    np.testing.assert_array_equal(ewise("sqrt", [4.0, 9.0]), [2.0, 3.0])
    np.testing.assert_array_equal(ewise("div", [1.0, 1.0], [2.0, 4.0]), [0.5, 0.25])


def test_ewise_errors():
    with pytest.raises(DimensionError):
        ewise("mul", [1.0, 2.0], [1.0])
    with pytest.raises(DegenerateInputError):
        ewise("div", [1.0, 1.0], [1.0, 1e-9], floor=1e-8)
    with pytest.raises(DegenerateInputError):
        ewise("div", [1.0], [0.0])
    with pytest.raises(DegenerateInputError):
        ewise("sqrt", [1.0, -1.0])
    with pytest.raises(ValueError):
        ewise("pow", [1.0], [2.0])


def test_ewise_is_pure(rng):
    a, b = rng.normal(size=5), rng.uniform(1.0, 2.0, size=5)
    a0, b0 = a.copy(), b.copy()
    ewise("div", a, b)
    ewise("mul", a, b)
    ewise("sqrt", b)
    np.testing.assert_array_equal(a, a0)
    np.testing.assert_array_equal(b, b0)


@pytest.mark.parametrize(
    "a, b, expected",
    [([1.0, 1.0], [0.5, 0.5], 1.0), ([1.0, 0.0], [0.0, 1.0], 0.0), ([2.0], [3.0], 6.0)],
)
def test_dot_examples(a, b, expected):
    assert dot(a, b) == expected


def test_dot_symmetric(rng):
    a, b = rng.normal(size=100), rng.normal(size=100)
    assert abs(dot(a, b) - dot(b, a)) <= 1e-12 * np.linalg.norm(a) * np.linalg.norm(b)
    with pytest.raises(DimensionError):
        dot(a, b[:-1])


def test_dense_solve_examples():
    np.testing.assert_array_equal(dense_solve(np.eye(2), [3.0, 5.0]), [3.0, 5.0])
    x = dense_solve([[3.0, 1.0], [1.0, 3.0]], [-1.0, 0.0])
    np.testing.assert_allclose(x, [-0.375, 0.125], rtol=0, atol=1e-15)


def test_dense_solve_singular_and_shapes():
    with pytest.raises(SingularMatrixError):
        dense_solve(np.zeros((2, 2)), [1.0, 1.0])
    with pytest.raises(DimensionError):
        dense_solve(np.ones((2, 3)), [1.0, 1.0])
    with pytest.raises(DimensionError):
        dense_solve(np.eye(2), [1.0, 1.0, 1.0])


def test_singular_matrix_is_linalg_error():
    with pytest.raises(np.linalg.LinAlgError):
        dense_solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


@pytest.mark.parametrize("size", [1, 5, 40, 150])
def test_dense_solve_round_trip(rng, size):
    A = rng.normal(size=(size, size))
    A += np.diag(np.abs(A).sum(axis=1) + 1.0)
    b = rng.normal(size=size)
    x = dense_solve(A, b)
    assert np.max(np.abs(A @ x - b)) <= 1e-9
