from __future__ import annotations

import numpy as np

from dataset import batching
from dataset.batching import Dataset

# Each image is the mean of this many outer products
IMAGE_RANK = 2


def _smooth_profiles(rng: np.random.Generator, count: int, side: int) -> np.ndarray:
    """Low-frequency profiles in [0, 1], shape (count, side)."""
    t = np.linspace(0.0, 1.0, side)
    freq = rng.uniform(0.5, 2.0, size=(count, 1))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(count, 1))
    return 0.5 + 0.5 * np.sin(2.0 * np.pi * freq * t + phase)


def synth_autoencoder(n_samples: int, side: int, seed) -> Dataset:
    """Seeded low-rank images (rank <= 2), flattened row-major; targets are the features."""
    if side < 2:
        raise ValueError(f"side must be >= 2, got {side}")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    u = _smooth_profiles(rng, n_samples * IMAGE_RANK, side).reshape(n_samples, IMAGE_RANK, side)
    v = _smooth_profiles(rng, n_samples * IMAGE_RANK, side).reshape(n_samples, IMAGE_RANK, side)
    images = np.einsum("nki,nkj->nij", u, v) / IMAGE_RANK
    images = np.clip(images, 0.0, 1.0)
    X = images.reshape(n_samples, side * side)
    batching.log_event(f"synthetic: {n_samples} images of {side}x{side}", "D")
    return Dataset(X, X, f"synth{side}x{side}")
