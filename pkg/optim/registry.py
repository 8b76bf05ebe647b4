"""The six optimizers behind one step interface."""
from __future__ import annotations

from typing import Optional

import numpy as np

from model.mlp import BatchEval
from numkit.dense_ops import DenseMatrix, DenseVector
from optim.baselines import AdagradState, AdamState, adagrad_step, adam_step, sgd_step
from optim.hyperparams import HyperParams
from optim.nlls import (
    FullJacobianState,
    Nlls1State,
    NllsLState,
    full_jacobian_step,
    nlls1_step,
    nllsl_step,
)

OPTIMIZER_NAMES = ("nlls1", "nllsl", "full_jacobian", "sgd", "adagrad", "adam")


class Optimizer:
    """Owns one optimizer state for one training run."""

    needs_jacobian = False

    def __init__(self, name: str, n: int, hp: HyperParams, seed=None):
        self.name = name
        self.n = n
        self.hp = hp
        self.steps = 0
        self.state = self._initial_state(seed)

    def _initial_state(self, seed):
        return None

    def _step(self, eval: BatchEval, jacobian: Optional[DenseMatrix]) -> DenseVector:
        raise NotImplementedError

    def step(self, eval: BatchEval, jacobian: Optional[DenseMatrix] = None) -> DenseVector:
        s = self._step(eval, jacobian)
        self.steps += 1
        return s


class Nlls1(Optimizer):
    def __init__(self, name, n, hp, seed=None, accumulate: bool = True):
        self.accumulate = accumulate
        super().__init__(name, n, hp, seed)

    def _initial_state(self, seed):
        return Nlls1State.initial(self.n, self.hp.d_init, accumulate=self.accumulate)

    def _step(self, eval, jacobian):
        return nlls1_step(self.state, eval, self.hp)


class NllsL(Optimizer):
    def _initial_state(self, seed):
        return NllsLState.initial(self.n, self.hp.d_init, seed)

    def _step(self, eval, jacobian):
        return nllsl_step(self.state, eval, self.hp)


class FullJacobian(Optimizer):
    needs_jacobian = True

    def _initial_state(self, seed):
        return FullJacobianState.initial(self.n, self.hp.d_init)

    def _step(self, eval, jacobian):
        if jacobian is None:
            raise ValueError("full_jacobian needs the exact Jacobian of the batch")
        # (c J)(c J)^T = jacobian_weight * J J^T
        scaled = np.sqrt(self.hp.jacobian_weight) * np.asarray(jacobian, dtype=np.float64)
        return full_jacobian_step(scaled, eval, self.state, self.hp)


class Sgd(Optimizer):
    def _step(self, eval, jacobian):
        return sgd_step(self.state, eval, self.hp)


class Adagrad(Optimizer):
    def _initial_state(self, seed):
        return AdagradState.initial(self.n, self.hp.accum_init)

    def _step(self, eval, jacobian):
        return adagrad_step(self.state, eval, self.hp)


class Adam(Optimizer):
    def _initial_state(self, seed):
        return AdamState.initial(self.n)

    def _step(self, eval, jacobian):
        return adam_step(self.state, eval, self.hp)


_CLASSES = {
    "nlls1": Nlls1,
    "nllsl": NllsL,
    "full_jacobian": FullJacobian,
    "sgd": Sgd,
    "adagrad": Adagrad,
    "adam": Adam,
}


def make_optimizer(name: str, n: int, hp: HyperParams, seed=None, **options) -> Optimizer:
    try:
        cls = _CLASSES[name]
    except KeyError:
        raise ValueError(f"unknown optimizer {name!r}; registered: {', '.join(OPTIMIZER_NAMES)}") from None
    return cls(name, n, hp, seed, **options)


def permutation_seed(run_seed: int) -> np.random.SeedSequence:
    # separate stream from weight init and batching
    return np.random.SeedSequence([int(run_seed), 0x5EED])
