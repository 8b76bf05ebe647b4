"""SGD, Adagrad and Adam as step functions over a flat weight vector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from model.mlp import BatchEval
from numkit.dense_ops import DenseVector, ewise
from optim.hyperparams import HyperParams
from optim.nlls import require_finite


@dataclass(eq=False)
class AdagradState:
    d2: DenseVector
    k: int = 0

    @classmethod
    def initial(cls, n: int, accum_init: float = 0.0) -> "AdagradState":
        return cls(d2=np.full(n, float(accum_init)))


@dataclass(eq=False)
class AdamState:
    m: DenseVector
    v: DenseVector
    t: int = 0

    @classmethod
    def initial(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n))


def sgd_step(state, eval: BatchEval, hp: HyperParams) -> DenseVector:
    require_finite(eval)
    return -hp.lr * eval.gradient


def adagrad_step(state: AdagradState, eval: BatchEval, hp: HyperParams) -> DenseVector:
    """-lr * g / sqrt(sum g^2 + eps)."""
    require_finite(eval)
    g = eval.gradient
    state.d2 = state.d2 + ewise("mul", g, g)
    state.k += 1
    return -hp.lr * ewise("div", g, ewise("sqrt", state.d2 + hp.eps))


def adam_step(state: AdamState, eval: BatchEval, hp: HyperParams) -> DenseVector:
    require_finite(eval)
    g = eval.gradient
    state.t += 1
    state.m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
    state.v = hp.beta2 * state.v + (1.0 - hp.beta2) * (g * g)
    m_hat = state.m / (1.0 - hp.beta1 ** state.t)
    v_hat = state.v / (1.0 - hp.beta2 ** state.t)
    return -hp.lr * m_hat / (np.sqrt(v_hat) + hp.eps)
