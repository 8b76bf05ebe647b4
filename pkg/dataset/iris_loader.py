from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from dataset import batching
from dataset.batching import Dataset
from errors import DataFormatError

IRIS_CLASSES = 3
IRIS_FEATURES = 4
IRIS_CSV = Path(__file__).with_name("iris.csv")


def _is_number(text: str) -> bool:
    try:
        float(text)
    except (TypeError, ValueError):
        return False
    return True


def load_iris_csv(path=IRIS_CSV) -> Dataset:
    """4 numeric columns + class label per row; optional header row.

    Features are standardized per column, classes one-hot in first-seen order.
    """
    path = Path(path)
    try:
        raw = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=False, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise DataFormatError(path, "empty file") from None
    except pd.errors.ParserError as e:
        raise DataFormatError(path, f"malformed CSV: {e}") from None

    # blank lines come back as NaN cells
    rows = [
        [cell.strip() if isinstance(cell, str) else "" for cell in row]
        for row in raw.itertuples(index=False, name=None)
    ]
    first = 0
    if rows and rows[0][0] and not _is_number(rows[0][0]):
        first = 1  # header

    features: list[list[float]] = []
    labels: list[int] = []
    classes: dict[str, int] = {}
    for idx in range(first, len(rows)):
        line = idx + 1
        cells = [c for c in rows[idx] if c != ""]
        if not cells:
            continue
        if len(cells) != IRIS_FEATURES + 1:
            raise DataFormatError(path, f"expected {IRIS_FEATURES + 1} fields, got {len(cells)}", line)
        try:
            values = [float(c) for c in cells[:IRIS_FEATURES]]
        except ValueError:
            raise DataFormatError(path, f"non-numeric feature in {cells[:IRIS_FEATURES]}", line) from None
        if not np.all(np.isfinite(values)):
            raise DataFormatError(path, "non-finite feature value", line)
        label = cells[IRIS_FEATURES]
        if label not in classes:
            if len(classes) == IRIS_CLASSES:
                raise DataFormatError(path, f"unknown class label {label!r}", line)
            classes[label] = len(classes)
        features.append(values)
        labels.append(classes[label])

    if not features:
        raise DataFormatError(path, "no data rows")

    X = np.asarray(features, dtype=np.float64)
    std = X.std(axis=0)
    std[std == 0.0] = 1.0
    X = (X - X.mean(axis=0)) / std
    y = np.asarray(labels, dtype=np.int64)
    Y = np.zeros((len(y), IRIS_CLASSES))
    Y[np.arange(len(y)), y] = 1.0

    batching.log_event(f"iris: {len(y)} samples, classes {list(classes)} from {path}", "D")
    return Dataset(X, Y, "iris", labels=y)
