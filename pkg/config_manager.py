from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from errors import ConfigError
from model.mlp import LayerSpec, autoencoder_layers, iris_layers, layers_from_sizes
from optim.hyperparams import HYPERPARAM_FIELDS
from optim.registry import OPTIMIZER_NAMES

DATASET_KINDS = ("iris", "idx", "synth_autoencoder")
LOSS_SOURCES = ("online", "full_train", "holdout")

# Config (flat dotted keys); parsed values are merged over these
DEFAULT_CONFIG: Dict[str, object] = {
    "name": "experiment",
    "dataset.kind": "iris",
    "dataset.path": "",           # empty: bundled iris.csv
    "dataset.labels_path": "",
    "dataset.samples": 256,
    "dataset.side": 8,
    "dataset.seed": 0,
    "dataset.train_samples": -1,  # -1: 128 for iris, all otherwise
    "model.sizes": "",            # empty: default network for the dataset kind
    "model.activations": "",
    "optimizers": ",".join(OPTIMIZER_NAMES),
    "epochs": 50,
    "runs": 5,
    "samples_per_batch": 32,
    "base_seed": 0,
    "output_dir": "results",
    "bench.loss": "online",
    "bench.workers": 1,
    "bench.reconstructions": False,
}

# optimizer.<name>.<field> keys beyond the HyperParams fields
OPTIMIZER_EXTRA_FIELDS = {"delta_scale": float, "accumulate": bool}

IRIS_TRAIN_SAMPLES = 128
AUTOENCODER_CODE = {"synth_autoencoder": 16, "idx": 64}


@dataclass(frozen=True)
class DatasetSpec:
    kind: str
    path: Optional[Path]
    labels_path: Optional[Path]
    samples: int
    side: int
    seed: int
    train_samples: int


@dataclass(frozen=True)
class OptimizerSpec:
    name: str
    overrides: Dict[str, object] = field(default_factory=dict)
    options: Dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    dataset: DatasetSpec
    layers: tuple[LayerSpec, ...]
    optimizers: tuple[OptimizerSpec, ...]
    epochs: int
    runs: int
    samples_per_batch: int
    base_seed: int
    output_dir: Path
    loss_source: str = "online"
    workers: int = 1
    reconstructions: bool = False
    source: Optional[Path] = None

    def optimizer(self, name: str) -> OptimizerSpec:
        for spec in self.optimizers:
            if spec.name == name:
                return spec
        raise KeyError(name)


# Parsing helpers
def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(kind, text: str):
    if kind is bool:
        return _parse_bool(text)
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def _split_list(text: str) -> list[str]:
    return [item.strip() for item in str(text).split(",") if item.strip()]


def parse_config_text(text: str, source="<config>") -> tuple[Dict[str, object], Dict[str, int]]:
    """key = value lines -> (values merged over DEFAULT_CONFIG, key -> line number)."""
    cfg: Dict[str, object] = DEFAULT_CONFIG.copy()
    lines: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(source, f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(source, "empty key", lineno)
        if key in lines:
            raise ConfigError(source, f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        lines[key] = lineno
        try:
            if key in DEFAULT_CONFIG:
                cfg[key] = _coerce(type(DEFAULT_CONFIG[key]), value)
            elif key.startswith("optimizer."):
                cfg[key] = _parse_optimizer_field(key, value)
            else:
                raise ConfigError(source, f"unknown key {key!r}", lineno)
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(source, f"bad value for {key!r}: {e}", lineno) from None
    return cfg, lines


def _parse_optimizer_field(key: str, value: str):
    parts = key.split(".")
    if len(parts) != 3:
        raise ValueError("expected optimizer.<name>.<field>")
    _, name, fld = parts
    if name not in OPTIMIZER_NAMES:
        raise ValueError(f"unknown optimizer {name!r}; registered: {', '.join(OPTIMIZER_NAMES)}")
    if fld in OPTIMIZER_EXTRA_FIELDS:
        return _coerce(OPTIMIZER_EXTRA_FIELDS[fld], value)
    if fld not in HYPERPARAM_FIELDS or fld == "gamma":
        raise ValueError(f"unknown hyperparameter {fld!r}")
    return value if fld == "smw_mode" else float(value)


def _resolve_path(text: str, base: Path) -> Optional[Path]:
    if not text:
        return None
    p = Path(text).expanduser()
    return p if p.is_absolute() else (base / p)


def _default_layers(kind: str, side: int) -> tuple[LayerSpec, ...]:
    if kind == "iris":
        return iris_layers()
    pixels = side * side if kind == "synth_autoencoder" else 28 * 28
    return autoencoder_layers(pixels, AUTOENCODER_CODE[kind])


def build_config(values: Dict[str, object], source="<config>", base_dir: Path | None = None,
                 lines: Dict[str, int] | None = None) -> ExperimentConfig:
    lines = lines or {}
    base_dir = base_dir or Path(".")

    def fail(key: str, message: str):
        raise ConfigError(source, message, lines.get(key))

    kind = str(values["dataset.kind"])
    if kind not in DATASET_KINDS:
        fail("dataset.kind", f"dataset.kind must be one of {DATASET_KINDS}, got {kind!r}")
    if kind == "idx" and not values["dataset.path"]:
        fail("dataset.path", "dataset.path is required for idx datasets")

    for key in ("epochs", "runs", "samples_per_batch", "bench.workers"):
        if int(values[key]) < 1:
            fail(key, f"{key} must be >= 1, got {values[key]}")

    train_samples = int(values["dataset.train_samples"])
    if train_samples < 0:
        train_samples = IRIS_TRAIN_SAMPLES if kind == "iris" else 0

    loss_source = str(values["bench.loss"])
    if loss_source not in LOSS_SOURCES:
        fail("bench.loss", f"bench.loss must be one of {LOSS_SOURCES}, got {loss_source!r}")
    if loss_source == "holdout" and train_samples == 0:
        fail("bench.loss", "holdout loss needs dataset.train_samples smaller than the dataset")

    try:
        if values["model.sizes"]:
            layers = layers_from_sizes(
                [int(s) for s in _split_list(values["model.sizes"])],
                _split_list(values["model.activations"]),
            )
        else:
            layers = _default_layers(kind, int(values["dataset.side"]))
    except ValueError as e:
        fail("model.sizes", f"bad model: {e}")

    names = _split_list(values["optimizers"])
    if not names:
        fail("optimizers", "at least one optimizer is required")
    for name in names:
        if name not in OPTIMIZER_NAMES:
            fail("optimizers", f"unknown optimizer {name!r}; registered: {', '.join(OPTIMIZER_NAMES)}")
    if len(set(names)) != len(names):
        fail("optimizers", "optimizer listed twice")

    optimizers = []
    for name in names:
        prefix = f"optimizer.{name}."
        fields_ = {k[len(prefix):]: v for k, v in values.items() if k.startswith(prefix)}
        options = {k: fields_.pop(k) for k in list(fields_) if k == "accumulate"}
        if options and name != "nlls1":
            fail(prefix + "accumulate", "accumulate only applies to nlls1")
        optimizers.append(OptimizerSpec(name, fields_, options))
    listed = {k.split(".")[1] for k in values if k.startswith("optimizer.")}
    stray = listed - set(names)
    if stray:
        key = next(k for k in values if k.startswith(f"optimizer.{sorted(stray)[0]}."))
        fail(key, f"settings for optimizer(s) not listed in 'optimizers': {', '.join(sorted(stray))}")

    dataset = DatasetSpec(
        kind=kind,
        path=_resolve_path(str(values["dataset.path"]), base_dir),
        labels_path=_resolve_path(str(values["dataset.labels_path"]), base_dir),
        samples=int(values["dataset.samples"]),
        side=int(values["dataset.side"]),
        seed=int(values["dataset.seed"]),
        train_samples=train_samples,
    )
    return ExperimentConfig(
        name=str(values["name"]),
        dataset=dataset,
        layers=layers,
        optimizers=tuple(optimizers),
        epochs=int(values["epochs"]),
        runs=int(values["runs"]),
        samples_per_batch=int(values["samples_per_batch"]),
        base_seed=int(values["base_seed"]),
        output_dir=Path(str(values["output_dir"])),
        loss_source=loss_source,
        workers=int(values["bench.workers"]),
        reconstructions=bool(values["bench.reconstructions"]),
        source=Path(source) if source != "<config>" else None,
    )


def load_config(path, output_dir: Optional[str] = None, base_seed: Optional[int] = None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, "r") as f:
        values, lines = parse_config_text(f.read(), path)
    if output_dir is not None:
        values["output_dir"] = output_dir
    if base_seed is not None:
        values["base_seed"] = int(base_seed)
    return build_config(values, path, path.parent, lines)


# File helpers
def ensure_dir(p: Path) -> Path:
    p = Path(p)
    p.mkdir(parents=True, exist_ok=True)
    return p


def atomic_write_text(path, text: str) -> None:
    """Write to a temp file in the same directory, then rename over `path`."""
    path = Path(path)
    ensure_dir(path.parent)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.remove(tmp)
        except OSError:
            pass
        raise
