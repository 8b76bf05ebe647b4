"""Seeded repetitions of (dataset x model x optimizer list).

Each (optimizer, run) pair is an independent job: run r initialises the model
with seed base_seed + r, so every optimizer starts run r from the same weights
and sees the same batch order. Jobs go through a queue drained by worker
threads; results are stored by key, so output does not depend on the worker count.
"""
from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from config_manager import ExperimentConfig, OptimizerSpec
from dataset.batching import Dataset, epoch_seed, make_batches, split_dataset
from dataset.idx_loader import load_idx
from dataset.iris_loader import IRIS_CSV, load_iris_csv
from dataset.synthetic import synth_autoencoder
from errors import ConfigError, ExperimentError
from model.mlp import Mlp, batch_loss, evaluate_batch, exact_jacobian, init_weights
from optim.hyperparams import HyperParams, resolve_hyperparams
from optim.registry import make_optimizer, permutation_seed

log_event: Callable[[str, str], None] = lambda msg, tag="B": None


def set_logger(logger_func: Callable[[str, str], None]) -> None:
    global log_event
    log_event = logger_func


@dataclass(eq=False)
class RunResult:
    losses: np.ndarray           # one entry per epoch
    steps: int
    final_k: Optional[int]
    hp: HyperParams
    n: int
    L: int
    B: int
    dropped: int
    seconds: float
    model: Optional[Mlp] = None


@dataclass(eq=False)
class LossTrace:
    optimizer: str
    runs: np.ndarray             # (R, epochs)
    metadata: Dict[str, object] = field(default_factory=dict)
    sample_model: Optional[Mlp] = field(default=None, repr=False)

    @property
    def epochs(self) -> int:
        return int(self.runs.shape[1])

    @property
    def mean(self) -> np.ndarray:
        return self.runs.mean(axis=0)

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    spec = cfg.dataset
    if spec.kind == "iris":
        return load_iris_csv(spec.path or IRIS_CSV)
    if spec.kind == "idx":
        return load_idx(spec.path, spec.labels_path)
    return synth_autoencoder(spec.samples, spec.side, spec.seed)


def _check_shapes(cfg: ExperimentConfig, data: Dataset) -> None:
    where = cfg.source or "<config>"
    if cfg.layers[0].in_dim != data.features.shape[1]:
        raise ConfigError(where, f"model input {cfg.layers[0].in_dim} != dataset features {data.features.shape[1]}")
    if cfg.layers[-1].out_dim != data.output_dim:
        raise ConfigError(where, f"model output {cfg.layers[-1].out_dim} != dataset targets {data.output_dim}")


def _epoch_loss(cfg, batch_losses, m, train, holdout) -> float:
    if cfg.loss_source == "full_train":
        return batch_loss(m, train.features, train.targets)
    if cfg.loss_source == "holdout":
        return batch_loss(m, holdout.features, holdout.targets)
    return float(np.mean(batch_losses))


def train_run(cfg: ExperimentConfig, data: Dataset, spec: OptimizerSpec, run: int, keep_model: bool = False) -> RunResult:
    """One run of one optimizer: epochs x B steps, state kept across epochs."""
    start = time.perf_counter()
    seed = cfg.base_seed + run
    train, holdout = split_dataset(data, cfg.dataset.train_samples, seed)
    m = init_weights(cfg.layers, seed)
    C = m.output_dim

    plan = make_batches(train, cfg.samples_per_batch, C, epoch_seed(seed, 0))
    try:
        hp = resolve_hyperparams(spec.name, plan.L, plan.B, spec.overrides)
        opt = make_optimizer(spec.name, m.n_weights, hp, permutation_seed(seed), **spec.options)
    except ValueError as e:
        raise ConfigError(cfg.source or "<config>", f"optimizer {spec.name}: {e}") from e

    losses = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        if epoch > 0:
            plan = make_batches(train, cfg.samples_per_batch, C, epoch_seed(seed, epoch))
        batch_losses = []
        for b, idx in enumerate(plan.batch_indices):
            try:
                X, Y = train.features[idx], train.targets[idx]
                ev = evaluate_batch(m, X, Y)
                J = exact_jacobian(m, X, Y) if opt.needs_jacobian else None
                m.weights += opt.step(ev, J)
            except Exception as e:
                raise ExperimentError(spec.name, run, epoch, b, e) from e
            batch_losses.append(ev.loss)
        try:
            losses[epoch] = _epoch_loss(cfg, batch_losses, m, train, holdout)
        except Exception as e:
            raise ExperimentError(spec.name, run, epoch, None, e) from e

    return RunResult(
        losses=losses,
        steps=opt.steps,
        final_k=getattr(opt.state, "k", None),
        hp=hp,
        n=m.n_weights,
        L=plan.L,
        B=plan.B,
        dropped=int(plan.dropped.shape[0]),
        seconds=time.perf_counter() - start,
        model=m if keep_model else None,
    )


class RunWorkers:
    """Threads draining a queue of (optimizer, run) jobs; None stops a worker."""

    def __init__(self, job: Callable[[OptimizerSpec, int], RunResult], count: int):
        self.job = job
        self.q: queue.Queue = queue.Queue()
        self.results: Dict[tuple[str, int], RunResult] = {}
        self.errors: Dict[tuple[str, int], Exception] = {}
        self.lock = threading.Lock()
        self.stop_flag = threading.Event()
        self.threads = [threading.Thread(target=self._run, daemon=True) for _ in range(max(1, count))]
        for t in self.threads:
            t.start()

    def _run(self):
        while True:
            item = self.q.get()
            if item is None:  # shutdown signal
                break
            spec, run = item
            if self.stop_flag.is_set():
                continue
            try:
                result = self.job(spec, run)
            except Exception as e:
                self.stop_flag.set()
                with self.lock:
                    self.errors[(spec.name, run)] = e
                continue
            with self.lock:
                self.results[(spec.name, run)] = result

    def push(self, spec: OptimizerSpec, run: int) -> None:
        self.q.put((spec, run))

    def close(self) -> None:
        for _ in self.threads:
            self.q.put(None)
        for t in self.threads:
            t.join()


def run_experiment(cfg: ExperimentConfig, data: Optional[Dataset] = None) -> Dict[str, LossTrace]:
    """LossTrace per optimizer, in config order."""
    data = data if data is not None else load_dataset(cfg)
    _check_shapes(cfg, data)
    log_event(
        f"experiment {cfg.name}: {data.name}, {len(cfg.optimizers)} optimizers x {cfg.runs} runs x "
        f"{cfg.epochs} epochs, loss={cfg.loss_source}, workers={cfg.workers}",
        "B",
    )

    workers = RunWorkers(lambda spec, run: train_run(cfg, data, spec, run, keep_model=(run == 0)), cfg.workers)
    jobs = [(spec, run) for spec in cfg.optimizers for run in range(cfg.runs)]
    for spec, run in jobs:
        workers.push(spec, run)
    workers.close()

    if workers.errors:
        # report the first failing job in submission order
        spec, run = next((s, r) for s, r in jobs if (s.name, r) in workers.errors)
        err = workers.errors[(spec.name, run)]
        log_event(f"experiment {cfg.name} failed: {err}", "B")
        raise err

    traces: Dict[str, LossTrace] = {}
    for spec in cfg.optimizers:
        results = [workers.results[(spec.name, run)] for run in range(cfg.runs)]
        first = results[0]
        trace = LossTrace(
            optimizer=spec.name,
            runs=np.vstack([r.losses for r in results]),
            metadata={
                "n": first.n,
                "L": first.L,
                "B": first.B,
                "gamma": first.hp.gamma,
                "delta": first.hp.delta,
                "alpha": first.hp.alpha,
                "lr": first.hp.lr,
                "smw_mode": first.hp.smw_mode,
                "jacobian_weight": first.hp.jacobian_weight,
                "dropped_per_epoch": first.dropped,
                "steps_per_run": [r.steps for r in results],
                "final_k": [r.final_k for r in results],
                "seeds": [cfg.base_seed + run for run in range(cfg.runs)],
                "wall_time": sum(r.seconds for r in results),
            },
            sample_model=first.model,
        )
        log_event(f"{spec.name}: mean final loss {trace.final_mean:.6g} ({trace.metadata['wall_time']:.2f}s)", "B")
        traces[spec.name] = trace
    return traces
