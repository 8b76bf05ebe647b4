"""Field checks comparing the library against the brute-force references.

`run_selftest()` returns one CheckResult per check; `main.py selftest` prints
them and exits nonzero if any failed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from model.mlp import BatchEval, batch_loss, evaluate_batch, exact_jacobian, init_weights, iris_layers, layers_from_sizes
from optim.baselines import AdagradState, adagrad_step
from optim.hyperparams import HyperParams
from optim.nlls import Nlls1State, NllsLState, nlls1_step, nllsl_sketch, nllsl_step, scaled_direction
from oracle.reference import (
    FdSpec,
    brute_accumulated_rank1,
    brute_rank1,
    brute_rankL,
    dense_smw_solve,
    fd_gradient,
)

log_event: Callable[[str, str], None] = lambda msg, tag="S": None


def set_logger(logger_func: Callable[[str, str], None]) -> None:
    global log_event
    log_event = logger_func


SELFTEST_SEED = 20240607

GRADIENT_TOL = 1e-5
JACOBIAN_TOL = 1e-9
SMW_TOL = 1e-10
RANK_TOL = 1e-12
ACCUMULATED_TOL = 1e-10
FD_COORDINATES = 200


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), np.finfo(float).tiny))


def _eval(g: np.ndarray, r: np.ndarray) -> BatchEval:
    return BatchEval(residuals=r, loss=float(np.dot(r, r) / r.shape[0]), gradient=g)


def _batch(rng: np.random.Generator, layers, samples: int):
    X = rng.normal(size=(samples, layers[0].in_dim))
    C = layers[-1].out_dim
    if layers[-1].activation == "softmax":
        Y = np.eye(C)[rng.integers(0, C, size=samples)]
    else:
        Y = rng.uniform(0.0, 1.0, size=(samples, C))
    return X, Y


# Checks
def check_gradient_fidelity(seed: int = SELFTEST_SEED) -> tuple[bool, str]:
    nets = [
        iris_layers(),
        layers_from_sizes([6, 12, 12], ["sigmoid", "identity"]),
        layers_from_sizes([5, 8, 8, 4], ["relu", "sigmoid", "softmax"]),
        layers_from_sizes([16, 6, 16], ["relu", "sigmoid"]),
        layers_from_sizes([3, 20, 2], ["sigmoid", "softmax"]),
    ]
    rng = np.random.default_rng(seed)
    worst, total = 0.0, 0
    for i, layers in enumerate(nets):
        m = init_weights(layers, seed + i)
        # nonzero biases so every parameter matters
        m.weights[:] += rng.normal(scale=0.1, size=m.n_weights)
        X, Y = _batch(rng, layers, 16)
        spec = FdSpec(h=1e-6, sample_size=FD_COORDINATES, seed=seed + i)
        coords = spec.coordinates(m.n_weights)
        fd = fd_gradient(lambda w: batch_loss(m.with_weights(w), X, Y), m.weights, spec)
        bp = evaluate_batch(m, X, Y).gradient[coords]
        worst = max(worst, _rel(bp, fd))
        total += coords.shape[0]
    return worst < GRADIENT_TOL, f"5 nets, {total} coordinates, max rel err {worst:.2e}"


def check_jacobian_consistency(seed: int = SELFTEST_SEED) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    m = init_weights(iris_layers(), seed)
    X, Y = _batch(rng, m.layers, 32)
    ev = evaluate_batch(m, X, Y)
    J = exact_jacobian(m, X, Y)
    err = _rel((2.0 / ev.L) * (J @ ev.residuals), ev.gradient)
    return err < JACOBIAN_TOL, f"n={m.n_weights} L={ev.L}, rel err {err:.2e}"


def _smw_residual(a, v, alpha, g, s) -> float:
    Hs = (np.sqrt(a) / alpha) * s + v * float(v @ s)
    return float(np.linalg.norm(Hs + g))


def check_smw_exactness(seed: int = SELFTEST_SEED, instances: int = 1000) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    exact_worst, exact_vs_dense, printed_failures = 0.0, 0.0, 0
    for _ in range(instances):
        n = int(rng.integers(1, 51))
        L = int(rng.integers(1, 20))
        alpha = float(rng.uniform(1e-3, 1.0))
        d_init = float(rng.uniform(0.05, 4.0))
        delta = float(rng.uniform(0.1, 2.0))
        ev = _eval(rng.normal(size=n), rng.normal(size=L))
        bound = SMW_TOL * (1.0 + np.linalg.norm(ev.gradient))
        for mode in ("exact", "as_printed"):
            state = Nlls1State.initial(n, d_init)
            s = nlls1_step(state, ev, HyperParams(alpha=alpha, delta=delta, smw_mode=mode))
            v = scaled_direction(state.f, state.j, delta)
            res = _smw_residual(state.d2, v, alpha, ev.gradient, s)
            if mode == "exact":
                exact_worst = max(exact_worst, res / bound)
                dense = dense_smw_solve(state.d2, v, alpha, ev.gradient)
                exact_vs_dense = max(exact_vs_dense, _rel(s, dense))
            elif res > bound:
                printed_failures += 1
    passed = exact_worst <= 1.0 and exact_vs_dense < 1e-8 and printed_failures > 0
    return passed, (
        f"{instances} instances, exact residual/bound {exact_worst:.2e}, "
        f"vs dense {exact_vs_dense:.2e}, as_printed off-bound on {printed_failures}"
    )


def check_rank1_relation(seed: int = SELFTEST_SEED, pairs: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        n, L = int(rng.integers(1, 41)), int(rng.integers(1, 31))
        g, r = rng.normal(size=n), rng.normal(size=L)
        J = brute_rank1(g, r, L)
        worst = max(worst, _rel((2.0 / L) * (J @ r), g))

    acc_f, acc_outer, acc_v = 0.0, 0.0, 0.0
    for k in range(1, 6):
        n, L = int(rng.integers(2, 30)), int(rng.integers(2, 20))
        gs = [rng.normal(size=n) for _ in range(k)]
        rs = [rng.normal(size=L) for _ in range(k)]
        state = Nlls1State.initial(n, 1e-5)
        hp = HyperParams(alpha=5e-3, delta=np.sqrt(L / 4.0))
        for g, r in zip(gs, rs):
            nlls1_step(state, _eval(g, r), hp)
        total = sum(float(r @ r) for r in rs)
        acc_f = max(acc_f, abs(total - L * state.f) / total)
        J1 = brute_accumulated_rank1(gs, rs, L)
        reduced = (L / (4.0 * state.f)) * np.outer(state.j, state.j)
        acc_outer = max(acc_outer, _rel(J1 @ J1.T, reduced))
        v = scaled_direction(state.f, state.j, hp.delta)
        acc_v = max(acc_v, _rel(np.outer(v, v), J1 @ J1.T))
    passed = worst < RANK_TOL and acc_f < RANK_TOL and max(acc_outer, acc_v) < ACCUMULATED_TOL
    return passed, (
        f"{pairs} pairs rel err {worst:.2e}; k<=5 inner product {acc_f:.2e}, "
        f"J1 J1^T {acc_outer:.2e}, v v^T {acc_v:.2e}"
    )


def check_rankL_relation(seed: int = SELFTEST_SEED, draws: int = 100, floor: float = 1e-8) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst_relation, worst_agree = 0.0, 0.0
    for d in range(draws):
        n, L = int(rng.integers(1, 41)), int(rng.integers(1, 31))
        g = rng.normal(size=n)
        # keep residuals clear of the clamp
        r = rng.choice([-1.0, 1.0], size=L) * rng.uniform(0.1, 2.0, size=L)
        sketch = nllsl_sketch(_eval(g, r), seed + d, floor)
        brute = brute_rankL(g, r, L, sketch.row_perm, sketch.res_perm, floor)
        dense = np.zeros((n, L))
        dense[np.arange(n), sketch.col_of_row] = sketch.values
        worst_agree = max(worst_agree, _rel(dense, brute))
        worst_relation = max(worst_relation, _rel((2.0 / L) * (brute @ r), g))
    passed = worst_agree < RANK_TOL and worst_relation < RANK_TOL
    return passed, f"{draws} draws, sketch vs brute {worst_agree:.2e}, (2/L) J r vs g {worst_relation:.2e}"


def check_adagrad_reduction(seed: int = SELFTEST_SEED, steps: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    n, L, alpha, d_init = 30, 12, 5e-3, 1e-5
    nlls = Nlls1State.initial(n, d_init, accumulate=False)
    ada = AdagradState.initial(n, accum_init=d_init)
    nlls_hp = HyperParams(alpha=alpha)
    ada_hp = HyperParams(lr=alpha, eps=0.0)
    mismatches = 0
    for _ in range(steps):
        ev = _eval(rng.normal(size=n), rng.normal(size=L))
        if not np.array_equal(nlls1_step(nlls, ev, nlls_hp), adagrad_step(ada, ev, ada_hp)):
            mismatches += 1
    return mismatches == 0, f"{steps} steps, {mismatches} not bit-identical"


def check_d2_monotone(seed: int = SELFTEST_SEED, steps: int = 50) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    n, L = 25, 10
    states = [Nlls1State.initial(n, 1e-5), NllsLState.initial(n, 1e-10, seed)]
    hp = HyperParams(alpha=5e-2, delta=0.5)
    decreases = 0
    for _ in range(steps):
        ev = _eval(rng.normal(size=n), rng.normal(size=L))
        for state in states:
            before = state.d2.copy()
            (nlls1_step if isinstance(state, Nlls1State) else nllsl_step)(state, ev, hp)
            decreases += int(np.sum(state.d2 < before))
    return decreases == 0, f"{steps} steps x 2 methods, {decreases} decreasing coordinates"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "gradient_fidelity": check_gradient_fidelity,
    "jacobian_consistency": check_jacobian_consistency,
    "smw_exactness": check_smw_exactness,
    "rank1_relation": check_rank1_relation,
    "rankL_relation": check_rankL_relation,
    "adagrad_reduction": check_adagrad_reduction,
    "d2_monotone": check_d2_monotone,
}


def run_selftest(names: Optional[Iterable[str]] = None) -> list[CheckResult]:
    results = []
    for name in (names or CHECKS):
        start = time.perf_counter()
        try:
            passed, detail = CHECKS[name]()
        except Exception as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        result = CheckResult(name, bool(passed), detail, time.perf_counter() - start)
        log_event(result.line(), "S")
        results.append(result)
    return results
