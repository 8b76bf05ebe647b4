from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from errors import DimensionError

log_event: Callable[[str, str], None] = lambda msg, tag="D": None


def set_logger(logger_func: Callable[[str, str], None]) -> None:
    global log_event
    log_event = logger_func


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    name: str
    labels: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if features.ndim != 2 or targets.ndim != 2:
            raise DimensionError("features and targets must be 2-D (samples, dims)")
        if features.shape[0] != targets.shape[0]:
            raise DimensionError(f"{features.shape[0]} feature rows but {targets.shape[0]} target rows")
        if np.isnan(features).any() or np.isnan(targets).any():
            raise ValueError(f"dataset {self.name!r} contains NaN")
        features.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def output_dim(self) -> int:
        return int(self.targets.shape[1])

    def subset(self, indices, name: str | None = None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        labels = None if self.labels is None else self.labels[indices]
        return Dataset(self.features[indices], self.targets[indices], name or self.name, labels)


@dataclass(frozen=True, eq=False)
class BatchPlan:
    batch_indices: np.ndarray   # (B, samples_per_batch)
    L: int
    B: int
    dropped: np.ndarray         # indices left out this epoch

    @property
    def samples_per_batch(self) -> int:
        return int(self.batch_indices.shape[1])


def epoch_seed(run_seed: int, epoch: int) -> int:
    return int(np.random.SeedSequence([int(run_seed), int(epoch)]).generate_state(1)[0])


def make_batches(dataset: Dataset, samples_per_batch: int, output_dim: int, epoch_seed: int) -> BatchPlan:
    """Seeded shuffle, then contiguous slices; the trailing remainder is dropped."""
    n = dataset.n_samples
    if samples_per_batch < 1:
        raise ValueError(f"samples_per_batch must be >= 1, got {samples_per_batch}")
    if samples_per_batch > n:
        raise ValueError(f"samples_per_batch={samples_per_batch} exceeds the {n} available samples")
    order = np.random.default_rng(epoch_seed).permutation(n)
    B = n // samples_per_batch
    kept = B * samples_per_batch
    return BatchPlan(
        batch_indices=order[:kept].reshape(B, samples_per_batch),
        L=samples_per_batch * int(output_dim),
        B=B,
        dropped=order[kept:],
    )


def split_dataset(dataset: Dataset, train_samples: int, seed) -> tuple[Dataset, Dataset]:
    """Shuffle with `seed`, first `train_samples` train, rest held out (0 = all train)."""
    n = dataset.n_samples
    if train_samples <= 0 or train_samples >= n:
        return dataset, dataset.subset(np.arange(0), f"{dataset.name}-holdout")
    order = np.random.default_rng(seed).permutation(n)
    train = dataset.subset(order[:train_samples], f"{dataset.name}-train")
    holdout = dataset.subset(order[train_samples:], f"{dataset.name}-holdout")
    log_event(f"{dataset.name}: {train.n_samples} train / {holdout.n_samples} held out", "D")
    return train, holdout
