"""Evaluation passes: the entropy-threshold rejection baseline, unknown-count
sweeps, and decision-region rendering as a rect/circle-only SVG."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from onering.metrics import MetricsReport, compute_metrics, evaluate_model, harmonic_mean  # noqa: F401
from onering.model import OneRingModel, forward, init_model, predict, softmax_probs
from onering.scenario import Dataset, ScenarioConfig, collapse_to_unknown
from onering.trainer import TrainConfig, adapt_target, train_source

log = logging.getLogger("onering")

UNKNOWN_FILL = "#c8c8c8"


def entropy_baseline(
    model_plain: OneRingModel, data: Dataset, thresholds, known_classes=None
) -> list[tuple[float, MetricsReport]]:
    """Reject-by-entropy baseline over a threshold grid.

    A sample is unknown when its normalized softmax entropy (entropy / ln n)
    exceeds the threshold; otherwise the plain n-way argmax wins.
    """
    thresholds = list(thresholds)
    if not thresholds:
        raise ValueError("empty threshold grid")
    if model_plain.include_unknown:
        raise ValueError("entropy baseline needs a plain n-way head")
    n = model_plain.n_known
    _, logits = forward(model_plain, data.samples)
    probs = softmax_probs(logits)
    ent = -(probs * np.log(np.maximum(probs, 1e-300))).sum(axis=1) / np.log(n)
    argmax = predict(logits)
    truth = collapse_to_unknown(data.labels, n)
    results = []
    for t in thresholds:
        preds = np.where(ent > t, n, argmax)
        results.append((float(t), compute_metrics(preds, truth, n, known_classes)))
    return results


@dataclass(frozen=True)
class SweepResult:
    """(n_target_private, h, os_star, unk) per sweep point, ordered by count."""

    rows: tuple[tuple[int, float, float, float], ...]

    def to_csv_text(self) -> str:
        lines = ["n_unknown,h,os_star,unk"]
        for count, h, os_star, unk in self.rows:
            lines.append(f"{count},{h:.6f},{os_star:.6f},{unk:.6f}")
        return "\n".join(lines) + "\n"


def run_pipeline(
    scenario: ScenarioConfig, cfg: TrainConfig
) -> tuple[OneRingModel, MetricsReport, MetricsReport]:
    """Train on source, adapt to target; return the model and the metrics
    before and after adaptation."""
    split, source, target = scenario.build()
    model = cfg.build_model(source.dim, split.n_known)
    train_source(model, source, cfg)
    before = evaluate_model(model, target, known_classes=split.shared)
    adapt_target(model, target, cfg)
    after = evaluate_model(model, target, known_classes=split.shared)
    return model, before, after


def sweep_unknown(scenario: ScenarioConfig, counts, cfg: TrainConfig) -> SweepResult:
    """Full source-train + adapt + evaluate pipeline per unknown-class count."""
    counts = [int(c) for c in counts]
    if not counts or any(c < 1 for c in counts):
        raise ValueError("sweep counts must be positive")
    rows = []
    for count in sorted(counts):
        _, _, report = run_pipeline(scenario.with_target_private(count), cfg)
        rows.append((count, report.h, report.os_star, report.unk))
        log.info("sweep n_unknown=%d h=%.4f", count, report.h)
    return SweepResult(tuple(rows))


def _region_colors(n_outputs: int, unknown_index: int | None, seed: int) -> list[str]:
    rng = np.random.default_rng(seed)
    colors: list[str] = []
    while len(colors) < n_outputs:
        rgb = rng.integers(40, 216, size=3)
        color = "#{:02x}{:02x}{:02x}".format(*rgb)
        if color != UNKNOWN_FILL and color not in colors:
            colors.append(color)
    if unknown_index is not None:
        colors[unknown_index] = UNKNOWN_FILL
    return colors


def decision_region_svg(
    model: OneRingModel,
    bounds: tuple[float, float, float, float],
    resolution: int,
    overlay: Dataset | None = None,
    seed: int = 0,
    size: int = 480,
) -> str:
    """Rasterize predict() over a 2-D grid as SVG rects, data points as circles.

    Region colors are seeded random; the unknown region is a fixed gray.
    """
    if model.input_dim != 2:
        raise ValueError(f"decision regions need a 2-D model, got input_dim {model.input_dim}")
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    xmin, ymin, xmax, ymax = (float(v) for v in bounds)
    if xmax <= xmin or ymax <= ymin:
        raise ValueError(f"empty bounds {bounds}")

    centers = (np.arange(resolution) + 0.5) / resolution
    gx = xmin + centers * (xmax - xmin)
    gy = ymin + centers * (ymax - ymin)
    xx, yy = np.meshgrid(gx, gy)
    grid = np.column_stack([xx.ravel(), yy.ravel()])
    _, logits = forward(model, grid)
    labels = predict(logits).reshape(resolution, resolution)

    unknown_index = model.unknown_index if model.include_unknown else None
    colors = _region_colors(model.n_outputs, unknown_index, seed)

    def sx(x: float) -> float:
        return (x - xmin) / (xmax - xmin) * size

    def sy(y: float) -> float:
        return (ymax - y) / (ymax - ymin) * size  # svg y axis points down

    cell = size / resolution
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
    ]
    for row in range(resolution):
        for col in range(resolution):
            x = col * cell
            y = size - (row + 1) * cell
            fill = colors[labels[row, col]]
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{cell:.2f}" height="{cell:.2f}" '
                f'fill="{fill}"/>'
            )
    if overlay is not None:
        shown = (
            collapse_to_unknown(overlay.labels, model.n_known)
            if overlay.labels.size and overlay.labels.min() >= 0
            else np.zeros(overlay.n, dtype=np.int64)
        )
        for point, cls in zip(overlay.samples, shown):
            fill = colors[cls] if cls < len(colors) else UNKNOWN_FILL
            parts.append(
                f'<circle cx="{sx(point[0]):.2f}" cy="{sy(point[1]):.2f}" r="3" '
                f'fill="{fill}" stroke="#000000" stroke-width="0.6"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts)
