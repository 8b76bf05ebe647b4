"""IDX (MNIST-family) image and label files.

  images: [magic 0x00000803][count][rows][cols] then count*rows*cols unsigned bytes
  labels: [magic 0x00000801][count] then count unsigned bytes
All header integers are 32-bit big-endian. Paths ending in .gz are gzip streams.
"""
from __future__ import annotations

import gzip
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from dataset import batching
from dataset.batching import Dataset
from errors import DataFormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _open(path: Path, mode: str):
    if path.suffix == ".gz":
        return gzip.open(path, mode)
    return open(path, mode)


def _read_all(path: Path) -> bytes:
    try:
        with _open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise DataFormatError(path, f"cannot read: {e}") from None


def read_idx_images(path) -> np.ndarray:
    path = Path(path)
    raw = _read_all(path)
    if len(raw) < 16:
        raise DataFormatError(path, f"truncated header ({len(raw)} bytes)")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IMAGES_MAGIC:
        raise DataFormatError(path, f"bad magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}")
    expected = count * rows * cols
    body = raw[16:]
    if len(body) != expected:
        raise DataFormatError(path, f"expected {expected} pixel bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(count, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    path = Path(path)
    raw = _read_all(path)
    if len(raw) < 8:
        raise DataFormatError(path, f"truncated header ({len(raw)} bytes)")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != LABELS_MAGIC:
        raise DataFormatError(path, f"bad magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}")
    body = raw[8:]
    if len(body) != count:
        raise DataFormatError(path, f"expected {count} label bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).copy()


def load_idx(images_path, labels_path: Optional[str] = None) -> Dataset:
    """Pixels scaled to [0, 1]; targets are the pixels themselves (autoencoding)."""
    images = read_idx_images(images_path)
    labels = None
    if labels_path:
        labels = read_idx_labels(labels_path)
        if labels.shape[0] != images.shape[0]:
            raise DataFormatError(labels_path, f"{labels.shape[0]} labels for {images.shape[0]} images")
    X = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    batching.log_event(f"idx: {X.shape[0]} images of {images.shape[1]}x{images.shape[2]} from {images_path}", "D")
    return Dataset(X, X, Path(images_path).name, labels=labels)


def write_idx_images(path, images) -> None:
    images = np.asarray(images)
    if images.ndim != 3 or images.dtype != np.uint8:
        raise ValueError("images must be a uint8 array of shape (count, rows, cols)")
    path = Path(path)
    with _open(path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGES_MAGIC, *images.shape))
        f.write(np.ascontiguousarray(images).tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.dtype != np.uint8:
        raise ValueError("labels must be a 1-D uint8 array")
    path = Path(path)
    with _open(path, "wb") as f:
        f.write(struct.pack(">II", LABELS_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())
