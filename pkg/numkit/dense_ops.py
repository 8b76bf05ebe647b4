"""Small dense kernels shared by the optimizers and the reference oracles.

Vectors and matrices are plain float64 numpy arrays. Every function here is
pure: inputs are never written to.
"""
from __future__ import annotations

import warnings

import numpy as np
import numpy.typing as npt
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from errors import DegenerateInputError, DimensionError, SingularMatrixError

DenseVector = npt.NDArray[np.float64]
DenseMatrix = npt.NDArray[np.float64]

# Smallest pivot magnitude dense_solve accepts
PIVOT_FLOOR = 1e-14
# Default division floor: rejects exact zeros only
TINY = float(np.finfo(np.float64).tiny)

EWISE_OPS = ("mul", "div", "sqrt")


def as_vector(a) -> DenseVector:
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {v.shape}")
    return v


def as_matrix(a) -> DenseMatrix:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {m.shape}")
    return m


def _same_length(a: DenseVector, b: DenseVector) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")


def ewise(op: str, a, b=None, floor: float = TINY) -> DenseVector:
    """Element-wise mul / div / sqrt.

    `floor` bounds the magnitude of `div` denominators from below.
    """
    a = as_vector(a)
    if op == "sqrt":
        if b is not None:
            raise DimensionError("sqrt takes a single operand")
        if np.any(a < 0.0):
            raise DegenerateInputError("sqrt of a negative entry")
        return np.sqrt(a)
    if b is None:
        raise DimensionError(f"{op} needs two operands")
    b = as_vector(b)
    _same_length(a, b)
    if op == "mul":
        return a * b
    if op == "div":
        small = np.abs(b) < floor
        if np.any(small):
            idx = int(np.flatnonzero(small)[0])
            raise DegenerateInputError(f"denominator {b[idx]!r} at index {idx} below floor {floor!r}")
        return a / b
    raise ValueError(f"unknown element-wise op {op!r}; expected one of {EWISE_OPS}")


def dot(a, b) -> float:
    a = as_vector(a)
    b = as_vector(b)
    _same_length(a, b)
    return float(np.dot(a, b))


def dense_solve(A, b) -> DenseVector:
    """Solve A x = b by LU with partial pivoting."""
    A = as_matrix(A)
    b = as_vector(b)
    rows, cols = A.shape
    if rows != cols:
        raise DimensionError(f"matrix must be square, got {rows}x{cols}")
    if b.shape[0] != rows:
        raise DimensionError(f"right-hand side has length {b.shape[0]}, matrix has {rows} rows")

    with warnings.catch_warnings():
        # exact zero pivots are reported below
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A)
    pivots = np.abs(np.diag(lu))
    if rows == 0 or pivots.min() < PIVOT_FLOOR:
        smallest = float(pivots.min()) if rows else 0.0
        raise SingularMatrixError(f"singular matrix: pivot magnitude {smallest:.3e} < {PIVOT_FLOOR:g}")
    return lu_solve((lu, piv), b)
