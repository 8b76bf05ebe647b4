"""Experiment artifacts: loss CSVs, meta.txt, SVG loss curves, PNG previews."""
from __future__ import annotations

import io
import math
from pathlib import Path
from typing import Callable, Dict, Mapping

import numpy as np
import pandas as pd
from markupsafe import escape
from PIL import Image

from bench import VERSION
from bench.experiment import LossTrace
from config_manager import ExperimentConfig, atomic_write_text, ensure_dir
from dataset.batching import Dataset
from errors import PreconditionError
from model.mlp import Mlp, forward

log_event: Callable[[str, str], None] = lambda msg, tag="B": None


def set_logger(logger_func: Callable[[str, str], None]) -> None:
    global log_event
    log_event = logger_func


# 17 significant digits round-trip every float64
FLOAT_FORMAT = "%.17g"

# Plot geometry (px)
PLOT_WIDTH = 720
PLOT_HEIGHT = 440
MARGIN = {"left": 70, "right": 170, "top": 20, "bottom": 50}
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")

PREVIEW_COUNT = 8
PREVIEW_SCALE = 4


def _to_csv(df: pd.DataFrame) -> str:
    buf = io.StringIO()
    df.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buf.getvalue()


def write_csv(trace: LossTrace, path) -> Path:
    """epoch,run_1,...,run_R,mean; one row per epoch."""
    cols = {"epoch": np.arange(1, trace.epochs + 1)}
    for r, series in enumerate(trace.runs, start=1):
        cols[f"run_{r}"] = series
    cols["mean"] = trace.mean
    path = Path(path)
    atomic_write_text(path, _to_csv(pd.DataFrame(cols)))
    return path


def write_summary_csv(traces: Mapping[str, LossTrace], path) -> Path:
    """epoch,<optimizer mean>...; one row per epoch."""
    if not traces:
        raise PreconditionError("no traces to write")
    epochs = {t.epochs for t in traces.values()}
    if len(epochs) != 1:
        raise PreconditionError(f"traces disagree on epoch count: {sorted(epochs)}")
    cols = {"epoch": np.arange(1, epochs.pop() + 1)}
    cols.update({name: t.mean for name, t in traces.items()})
    path = Path(path)
    atomic_write_text(path, _to_csv(pd.DataFrame(cols)))
    return path


def write_meta(cfg: ExperimentConfig, traces: Mapping[str, LossTrace], path) -> Path:
    lines = [
        f"version = {VERSION}",
        f"name = {cfg.name}",
        f"config = {cfg.source or ''}",
        f"dataset = {cfg.dataset.kind}",
        f"loss = {cfg.loss_source}",
        f"epochs = {cfg.epochs}",
        f"runs = {cfg.runs}",
        f"samples_per_batch = {cfg.samples_per_batch}",
        f"seeds = {','.join(str(cfg.base_seed + r) for r in range(cfg.runs))}",
    ]
    first = next(iter(traces.values()), None)
    if first is not None:
        for key in ("n", "L", "B", "gamma", "dropped_per_epoch"):
            lines.append(f"{key} = {first.metadata[key]}")
    for name, t in traces.items():
        md = t.metadata
        lines.append(f"{name}.delta = {md['delta']!r}")
        lines.append(f"{name}.alpha = {md['alpha']!r}")
        lines.append(f"{name}.lr = {md['lr']!r}")
        if name == "full_jacobian":
            lines.append(f"{name}.jacobian_weight = {md['jacobian_weight']!r}")
        lines.append(f"{name}.steps_per_run = {','.join(str(s) for s in md['steps_per_run'])}")
        lines.append(f"{name}.final_loss = {t.final_mean!r}")
        lines.append(f"{name}.wall_time = {md['wall_time']:.3f}")
    path = Path(path)
    atomic_write_text(path, "\n".join(lines) + "\n")
    return path


class SvgCanvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.items: list[str] = []

    def line(self, x1, y1, x2, y2, stroke="#cccccc", width=1.0):
        self.items.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="{stroke}" stroke-width="{width}"/>'
        )

    def polyline(self, points, stroke: str, width=1.5, label: str = ""):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        title = f"<title>{escape(label)}</title>" if label else ""
        self.items.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}">{title}</polyline>'
        )

    def text(self, x, y, string, anchor="start", size=12, extra=""):
        self.items.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" text-anchor="{anchor}" {extra}>{escape(string)}</text>'
        )

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}" font-family="sans-serif">\n'
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n'
        )
        return head + "\n".join(self.items) + "\n</svg>\n"


def _series(trace) -> np.ndarray:
    values = trace.mean if isinstance(trace, LossTrace) else np.asarray(trace, dtype=np.float64)
    return np.asarray(values, dtype=np.float64)


def svg_plot_text(traces: Mapping[str, object]) -> str:
    """Mean loss per epoch, log10 y-axis, one polyline per optimizer."""
    if not traces:
        raise PreconditionError("render_svg_plot needs at least one trace")
    series = {name: _series(t) for name, t in traces.items()}
    if any(s.size == 0 for s in series.values()):
        raise PreconditionError("empty loss series")

    # NaN/Inf epochs (a diverged run) are left out of the axis range and the lines
    positive = np.concatenate([s[np.isfinite(s) & (s > 0)] for s in series.values()])
    floor = positive.min() if positive.size else 1e-300
    logs = {name: np.log10(np.maximum(s, floor)) for name, s in series.items()}
    shown = np.concatenate([v[np.isfinite(v)] for v in logs.values()])
    lo, hi = (float(shown.min()), float(shown.max())) if shown.size else (0.0, 0.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    epochs = max(s.size for s in series.values())

    x0, y0 = MARGIN["left"], MARGIN["top"]
    w = PLOT_WIDTH - MARGIN["left"] - MARGIN["right"]
    h = PLOT_HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(epoch: int) -> float:
        return x0 + (w * (epoch - 1) / (epochs - 1) if epochs > 1 else w / 2)

    def py(value: float) -> float:
        return y0 + h * (hi - value) / (hi - lo)

    svg = SvgCanvas(PLOT_WIDTH, PLOT_HEIGHT)
    for decade in range(math.ceil(lo), math.floor(hi) + 1):
        svg.line(x0, py(decade), x0 + w, py(decade))
        svg.text(x0 - 6, py(decade) + 4, f"1e{decade}", anchor="end", size=10)
    svg.line(x0, y0 + h, x0 + w, y0 + h, stroke="#000000")
    svg.line(x0, y0, x0, y0 + h, stroke="#000000")
    for epoch in sorted({1, epochs, *range(10, epochs, 10)}):
        svg.text(px(epoch), y0 + h + 16, str(epoch), anchor="middle", size=10)
    svg.text(x0 + w / 2, PLOT_HEIGHT - 10, "Epochs", anchor="middle")
    svg.text(16, y0 + h / 2, "Loss", anchor="middle", extra=f'transform="rotate(-90 16 {y0 + h / 2:.2f})"')

    for i, (name, values) in enumerate(logs.items()):
        color = COLORS[i % len(COLORS)]
        points = [(px(e + 1), py(v)) for e, v in enumerate(values) if np.isfinite(v)]
        svg.polyline(points, color, label=name)
        ly = y0 + 14 + 18 * i
        svg.line(x0 + w + 14, ly - 4, x0 + w + 38, ly - 4, stroke=color, width=2.5)
        svg.text(x0 + w + 44, ly, name)
    return svg.render()


def render_svg_plot(traces: Mapping[str, object], path) -> Path:
    path = Path(path)
    atomic_write_text(path, svg_plot_text(traces))
    return path


def render_reconstructions(m: Mlp, data: Dataset, path, count: int = PREVIEW_COUNT) -> Path:
    """Top row inputs, bottom row model outputs, as a grayscale PNG."""
    pixels = data.features.shape[1]
    side = math.isqrt(pixels)
    if side * side != pixels or m.output_dim != pixels:
        raise PreconditionError(f"reconstructions need square images, got {pixels} features")
    count = min(count, data.n_samples)
    X = data.features[:count]
    rows = [X, np.clip(forward(m, X), 0.0, 1.0)]
    grid = np.ones((2 * side + 1, count * (side + 1) - 1))
    for r, images in enumerate(rows):
        for i, img in enumerate(images):
            top, left = r * (side + 1), i * (side + 1)
            grid[top:top + side, left:left + side] = img.reshape(side, side)
    img = Image.fromarray(np.round(grid * 255.0).astype(np.uint8))
    img = img.resize((img.width * PREVIEW_SCALE, img.height * PREVIEW_SCALE), Image.Resampling.NEAREST)
    path = Path(path)
    ensure_dir(path.parent)
    img.save(path)
    return path


def write_outputs(cfg: ExperimentConfig, traces: Dict[str, LossTrace], data: Dataset | None = None) -> Path:
    """<output_dir>/<name>/{loss.csv, loss_<optimizer>.csv, meta.txt, plot.svg[, reconstructions.png]}."""
    out = ensure_dir(cfg.output_dir / cfg.name)
    write_summary_csv(traces, out / "loss.csv")
    for name, trace in traces.items():
        write_csv(trace, out / f"loss_{name}.csv")
    write_meta(cfg, traces, out / "meta.txt")
    render_svg_plot(traces, out / "plot.svg")
    if cfg.reconstructions and data is not None:
        for name, trace in traces.items():
            if trace.sample_model is not None:
                render_reconstructions(trace.sample_model, data, out / f"reconstructions_{name}.png")
    log_event(f"wrote results to {out}", "B")
    return out
