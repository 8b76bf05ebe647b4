import numpy as np
import pytest

import oracle.reference as reference
from errors import CapacityError, DegenerateInputError, PoisonedInputError
from oracle.reference import (
    FdSpec,
    brute_accumulated_rank1,
    brute_rank1,
    brute_rankL,
    dense_lowrank_solve,
    dense_smw_solve,
    fd_gradient,
    permutation_matrix,
)


def test_fd_gradient_quadratic(rng):
    w = rng.normal(size=7)
    np.testing.assert_allclose(fd_gradient(lambda x: float(x @ x), w), 2.0 * w, rtol=1e-8, atol=1e-9)


def test_fd_gradient_sampled_coordinates(rng):
    w = rng.normal(size=50)
    spec = FdSpec(sample_size=10, seed=2)
    coords = spec.coordinates(50)
    assert coords.shape == (10,) and len(set(coords.tolist())) == 10
    np.testing.assert_allclose(fd_gradient(lambda x: float(np.sum(x ** 3)), w, spec), 3.0 * w[coords] ** 2, rtol=1e-6)


def test_fd_gradient_rejects_non_finite():
    with pytest.raises(PoisonedInputError):
        fd_gradient(lambda x: float("nan"), np.zeros(2))
    with pytest.raises(ValueError):
        FdSpec(h=0.0)


def test_dense_smw_solve_worked_example():
    s = dense_smw_solve([1.0, 1.0], [1.0, 1.0], 0.5, [1.0, 0.0])
    np.testing.assert_allclose(s, [-0.375, 0.125], atol=1e-15)
    with pytest.raises(DegenerateInputError):
        dense_smw_solve([0.0, 1.0], [1.0, 1.0], 0.5, [1.0, 0.0])


def test_dense_lowrank_solve_worked_example():
    s = dense_lowrank_solve([[1.0], [1.0]], [1.0, 1.0], 1.0, [1.0, 0.0])
    np.testing.assert_allclose(s, [-2.0 / 3.0, 1.0 / 3.0], atol=1e-15)


def test_brute_rank1_relation(rng):
    for _ in range(20):
        n, L = int(rng.integers(1, 20)), int(rng.integers(1, 15))
        g, r = rng.normal(size=n), rng.normal(size=L)
        J = brute_rank1(g, r, L)
        assert J.shape == (n, L)
        np.testing.assert_allclose((2.0 / L) * J @ r, g, rtol=1e-12, atol=1e-14)
    with pytest.raises(DegenerateInputError):
        brute_rank1([1.0], [0.0, 0.0], 2)


def test_brute_accumulated_rank1_reduction(rng):
    n, L, k = 6, 4, 3
    gs = [rng.normal(size=n) for _ in range(k)]
    rs = [rng.normal(size=L) for _ in range(k)]
    J = brute_accumulated_rank1(gs, rs, L)
    assert J.shape == (n, k * L)
    f = sum(float(r @ r) for r in rs) / L
    j = np.sum(gs, axis=0)
    np.testing.assert_allclose(J @ J.T, (L / (4.0 * f)) * np.outer(j, j), rtol=1e-10)


def test_permutation_matrix():
    P = permutation_matrix([2, 0, 1])
    np.testing.assert_array_equal(P @ [10.0, 20.0, 30.0], [30.0, 10.0, 20.0])
    np.testing.assert_array_equal(P @ P.T, np.eye(3))


def test_brute_rankL_one_nonzero_per_row(rng):
    n, L = 9, 4
    g, r = rng.normal(size=n), rng.uniform(0.5, 1.5, size=L)
    J = brute_rankL(g, r, L, rng.permutation(n), rng.permutation(L), 1e-8)
    np.testing.assert_array_equal(np.count_nonzero(J, axis=1), 1)
    np.testing.assert_allclose((2.0 / L) * J @ r, g, rtol=1e-12, atol=1e-14)


def test_oracle_capacity_guard(monkeypatch):
    monkeypatch.setattr(reference, "ORACLE_CAPACITY", 10)
    with pytest.raises(CapacityError):
        brute_rank1(np.ones(4), np.ones(4), 4)
    with pytest.raises(CapacityError):
        dense_smw_solve(np.ones(4), np.ones(4), 1.0, np.ones(4))
