"""Search directions from stochastic Jacobian estimates.

All three methods solve (J J^T + (1/alpha) D) s = -g with D = diag(sqrt(d2)),
d2 the running sum of squared gradients:

  * NLLS1 replaces J J^T by v v^T, v = (delta / sqrt(f)) * sum(g)
  * NLLSL builds v from the accumulated non-zeros of a permuted rank-L estimate
  * Full Jacobian uses the exact n x L Jacobian of the current batch

Steps are returned; the caller applies w <- w + s.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from errors import DimensionError, PoisonedInputError
from model.mlp import BatchEval
from numkit.dense_ops import TINY, DenseMatrix, DenseVector, as_matrix, as_vector, dense_solve, dot, ewise
from optim.hyperparams import HyperParams

log_event: Callable[[str, str], None] = lambda msg, tag="O": None


def set_logger(logger_func: Callable[[str, str], None]) -> None:
    global log_event
    log_event = logger_func


def require_finite(eval: BatchEval) -> None:
    if not np.all(np.isfinite(eval.gradient)):
        raise PoisonedInputError("gradient contains NaN or Inf")
    if not np.isfinite(eval.loss):
        raise PoisonedInputError(f"batch loss is not finite: {eval.loss!r}")


# State
@dataclass(eq=False)
class Nlls1State:
    f: float
    j: DenseVector
    d2: DenseVector
    k: int = 0
    # False zeroes j every step (reduces the method to Adagrad)
    accumulate: bool = True

    @classmethod
    def initial(cls, n: int, d_init: float, accumulate: bool = True) -> "Nlls1State":
        return cls(f=0.0, j=np.zeros(n), d2=np.full(n, float(d_init)), accumulate=accumulate)


@dataclass(eq=False)
class NllsLState:
    f: float
    u: DenseVector
    d2: DenseVector
    rng: np.random.Generator = field(repr=False)
    k: int = 0

    @classmethod
    def initial(cls, n: int, d_init: float, perm_seed) -> "NllsLState":
        return cls(f=0.0, u=np.zeros(n), d2=np.full(n, float(d_init)), rng=np.random.default_rng(perm_seed))


@dataclass(eq=False)
class FullJacobianState:
    d2: DenseVector
    k: int = 0

    @classmethod
    def initial(cls, n: int, d_init: float) -> "FullJacobianState":
        return cls(d2=np.full(n, float(d_init)))


@dataclass(frozen=True, eq=False)
class RankLSketch:
    row_perm: np.ndarray     # row_perm[t] = weight row placed in slot t
    res_perm: np.ndarray     # res_perm[c] = residual index at permuted column c
    values: DenseVector      # the single non-zero of each row
    col_of_row: np.ndarray   # residual (column) index of each row's non-zero


# Solves
def smw_rank1_solve(a, v, g, alpha: float, smw_mode: str = "exact", floor: float = TINY) -> DenseVector:
    """s solving ((1/alpha) diag(sqrt(a)) + v v^T) s = -g.

    smw_mode="as_printed" uses 1 + alpha_1 as the denominator instead of
    1 + alpha_2; the result does not solve the system.
    """
    a = as_vector(a)
    v = as_vector(v)
    g = as_vector(g)
    root = ewise("sqrt", a)
    s1 = -alpha * ewise("div", g, root, floor)
    alpha1 = dot(v, s1)
    s2 = alpha * ewise("div", v, root, floor)
    alpha2 = dot(v, s2)
    denom = 1.0 + (alpha2 if smw_mode == "exact" else alpha1)
    return s1 - (alpha1 / denom) * s2


def smw_lowrank_solve(J, a, g, alpha: float, floor: float = TINY) -> DenseVector:
    """s solving (J J^T + (1/alpha) diag(sqrt(a))) s = -g through an L x L inner solve."""
    J = as_matrix(J)
    g = as_vector(g)
    inv_diag = alpha * ewise("div", np.ones_like(g), ewise("sqrt", a), floor)
    ainv_g = inv_diag * g
    ainv_J = inv_diag[:, None] * J
    inner = np.eye(J.shape[1]) + J.T @ ainv_J
    y = dense_solve(inner, J.T @ ainv_g)
    return -ainv_g + ainv_J @ y


def _accumulate(state, eval: BatchEval) -> None:
    g = eval.gradient
    state.f += float(np.dot(eval.residuals, eval.residuals)) / eval.L
    state.d2 = state.d2 + ewise("mul", g, g)


def scaled_direction(f: float, acc: DenseVector, delta: float) -> DenseVector:
    if f <= 0.0:
        return np.zeros_like(acc)
    return (delta / np.sqrt(f)) * acc


# NLLS1
def nlls1_step(state: Nlls1State, eval: BatchEval, hp: HyperParams) -> DenseVector:
    require_finite(eval)
    if eval.gradient.shape != state.j.shape:
        raise DimensionError(f"gradient length {eval.gradient.shape[0]} != state length {state.j.shape[0]}")
    _accumulate(state, eval)
    if state.accumulate:
        state.j = state.j + eval.gradient
    else:
        state.j = np.zeros_like(state.j)
    v = scaled_direction(state.f, state.j, hp.delta)
    s = smw_rank1_solve(state.d2, v, eval.gradient, hp.alpha, hp.smw_mode)
    state.k += 1
    return s


# NLLSL
def _clamp(values: np.ndarray, floor: float) -> np.ndarray:
    sign = np.where(values < 0.0, -1.0, 1.0)
    return np.where(np.abs(values) < floor, sign * floor, values)


def nllsl_sketch(eval: BatchEval, seed, floor: float) -> RankLSketch:
    """Non-zeros of (L/2) diag(g) P1^T R P2 with R's entries from permuted residuals.

    Slots 0..L-2 get distinct permuted residuals; every later slot shares the
    last one, so (2/L) J r = g holds exactly when no residual is clamped.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    row_perm = rng.permutation(eval.gradient.shape[0])
    res_perm = rng.permutation(eval.L)
    return sketch_with_permutations(eval.gradient, eval.residuals, row_perm, res_perm, floor)


def sketch_with_permutations(g, r, row_perm, res_perm, floor: float) -> RankLSketch:
    if floor <= 0.0:
        raise ValueError("floor must be > 0")
    g = as_vector(g)
    r = as_vector(r)
    row_perm = np.asarray(row_perm, dtype=np.int64)
    res_perm = np.asarray(res_perm, dtype=np.int64)
    n, L = g.shape[0], r.shape[0]
    if row_perm.shape != (n,) or res_perm.shape != (L,):
        raise DimensionError(f"permutations must have lengths n={n} and L={L}")

    slot_cols = np.minimum(np.arange(n), L - 1)
    col_of_row = np.empty(n, dtype=np.int64)
    col_of_row[row_perm] = res_perm[slot_cols]
    assigned = r[col_of_row]
    clamped = int(np.count_nonzero(np.abs(assigned) < floor))
    if clamped:
        log_event(f"nllsl: {clamped} of {n} residual reciprocals clamped at {floor:g}", "O")
    rho = _clamp(assigned, floor)
    values = (L / 2.0) * g * (1.0 / rho)
    return RankLSketch(row_perm=row_perm, res_perm=res_perm, values=values, col_of_row=col_of_row)


def nllsl_step(state: NllsLState, eval: BatchEval, hp: HyperParams) -> DenseVector:
    require_finite(eval)
    if eval.gradient.shape != state.u.shape:
        raise DimensionError(f"gradient length {eval.gradient.shape[0]} != state length {state.u.shape[0]}")
    sketch = nllsl_sketch(eval, state.rng, hp.div_floor)
    _accumulate(state, eval)
    state.u = state.u + sketch.values
    v = scaled_direction(state.f, state.u, hp.delta)
    s = smw_rank1_solve(state.d2, v, eval.gradient, hp.alpha, hp.smw_mode)
    state.k += 1
    return s


# Full Jacobian
def full_jacobian_step(J: DenseMatrix, eval: BatchEval, state: FullJacobianState, hp: HyperParams) -> DenseVector:
    require_finite(eval)
    J = as_matrix(J)
    if J.shape != (eval.gradient.shape[0], eval.L):
        raise DimensionError(f"Jacobian shape {J.shape} does not match n={eval.gradient.shape[0]}, L={eval.L}")
    g = eval.gradient
    state.d2 = state.d2 + ewise("mul", g, g)
    s = smw_lowrank_solve(J, state.d2, g, hp.alpha)
    state.k += 1
    return s
