"""Brute-force references for the gradient, SMW and Jacobian-estimate code.

Everything here is built the slow, explicit way (coordinate loops, dense
matrices, permutation matrices) and reuses nothing from model/ or optim/.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from errors import CapacityError, DegenerateInputError, PoisonedInputError, SingularMatrixError

# Oracles refuse matrices beyond this many entries
ORACLE_CAPACITY = 1_000_000


@dataclass(frozen=True)
class FdSpec:
    h: float = 1e-6
    sample_size: Optional[int] = None   # None = every coordinate
    seed: int = 0

    def __post_init__(self):
        if not self.h > 0.0:
            raise ValueError(f"h must be > 0, got {self.h!r}")

    def coordinates(self, n: int) -> np.ndarray:
        if self.sample_size is None or self.sample_size >= n:
            return np.arange(n)
        rng = np.random.default_rng(self.seed)
        return np.sort(rng.choice(n, size=self.sample_size, replace=False))


def _guard(rows: int, cols: int) -> None:
    if rows * cols > ORACLE_CAPACITY:
        raise CapacityError(f"oracle matrix {rows}x{cols} exceeds {ORACLE_CAPACITY} entries")


def fd_gradient(loss_fn: Callable[[np.ndarray], float], w, spec: FdSpec = FdSpec()) -> np.ndarray:
    """Central differences on spec.coordinates(len(w)), in that order."""
    w = np.array(w, dtype=np.float64, copy=True)
    coords = spec.coordinates(w.shape[0])
    out = np.empty(coords.shape[0])
    for k, i in enumerate(coords):
        saved = w[i]
        w[i] = saved + spec.h
        up = float(loss_fn(w))
        w[i] = saved - spec.h
        down = float(loss_fn(w))
        w[i] = saved
        if not (np.isfinite(up) and np.isfinite(down)):
            raise PoisonedInputError(f"loss not finite around coordinate {i}")
        out[k] = (up - down) / (2.0 * spec.h)
    return out


def dense_smw_solve(a, v, alpha: float, g) -> np.ndarray:
    """Form H = (1/alpha) diag(sqrt(a)) + v v^T and solve H s = -g."""
    a = np.asarray(a, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if np.any(a <= 0.0):
        raise DegenerateInputError("a must be positive element-wise")
    n = a.shape[0]
    _guard(n, n)
    H = np.zeros((n, n))
    for i in range(n):
        H[i, i] = np.sqrt(a[i]) / alpha
        for k in range(n):
            H[i, k] += v[i] * v[k]
    try:
        return np.linalg.solve(H, -g)
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(str(e)) from None


def dense_lowrank_solve(J, a, alpha: float, g) -> np.ndarray:
    """Form H = J J^T + (1/alpha) diag(sqrt(a)) and solve H s = -g."""
    J = np.asarray(J, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    n = J.shape[0]
    _guard(n, n)
    H = J @ J.T + np.diag(np.sqrt(a) / alpha)
    try:
        return np.linalg.solve(H, -np.asarray(g, dtype=np.float64))
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(str(e)) from None


def brute_rank1(g, r, L: int) -> np.ndarray:
    """theta * beta_i * rho_l with theta = L / (2 ||r||^2), beta = g, rho = r."""
    g = np.asarray(g, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    norm2 = 0.0
    for x in r:
        norm2 += x * x
    if norm2 == 0.0:
        raise DegenerateInputError("rank-1 estimate needs a nonzero residual")
    n = g.shape[0]
    _guard(n, L)
    theta = L / (2.0 * norm2)
    J = np.zeros((n, L))
    for i in range(n):
        for l in range(L):
            J[i, l] = theta * g[i] * r[l]
    return J


def brute_accumulated_rank1(gradients: Sequence, residuals: Sequence, L: int) -> np.ndarray:
    """Stacked estimate (1/(2f)) (sum g) [r1^T ... rk^T], shape n x kL."""
    f = sum(float(np.sum(np.square(r))) / L for r in residuals)
    if f == 0.0:
        raise DegenerateInputError("accumulated residuals are all zero")
    j = np.sum(np.asarray(gradients, dtype=np.float64), axis=0)
    stacked = np.concatenate([np.asarray(r, dtype=np.float64) for r in residuals])
    _guard(j.shape[0], stacked.shape[0])
    return np.outer(j / (2.0 * f), stacked)


def permutation_matrix(perm) -> np.ndarray:
    """P with P[t, perm[t]] = 1, so (P x)[t] = x[perm[t]]."""
    perm = np.asarray(perm)
    P = np.zeros((perm.shape[0], perm.shape[0]))
    for t, p in enumerate(perm):
        P[t, p] = 1.0
    return P


def brute_rankL(g, r, L: int, row_perm, res_perm, floor: float) -> np.ndarray:
    """(L/2) diag(g) P1^T R P2, beta taken over the permuted residuals P2 r."""
    g = np.asarray(g, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    n = g.shape[0]
    _guard(n, L)
    P1 = permutation_matrix(row_perm)
    P2 = permutation_matrix(res_perm)
    permuted = P2 @ r
    R = np.zeros((n, L))
    for t in range(n):
        c = t if t < L - 1 else L - 1
        rho = permuted[c]
        if abs(rho) < floor:
            rho = -floor if rho < 0.0 else floor
        R[t, c] = 1.0 / rho
    return ((L / 2.0) * np.diag(g)) @ P1.T @ R @ P2
