"""Matplotlib report figures written next to the delimited outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from onering.evaluation import SweepResult


def save_sweep_figure(sweep: SweepResult, path) -> None:
    counts = [r[0] for r in sweep.rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for idx, label in ((1, "H"), (2, "OS*"), (3, "UNK")):
        ax.plot(counts, [r[idx] for r in sweep.rows], marker="o", label=label)
    ax.set_xlabel("target-private classes")
    ax.set_ylabel("score")
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_baseline_figure(results, reference_h: float, path) -> None:
    """Baseline H per threshold against the open-set source model's H."""
    thresholds = [t for t, _ in results]
    hs = [report.h for _, report in results]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(thresholds, hs, marker="o", label="entropy threshold")
    ax.axhline(reference_h, color="tab:red", linestyle="--", label="open-set source model")
    ax.set_xlabel("entropy threshold")
    ax.set_ylabel("H")
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_adaptation_figure(records, path) -> None:
    """Score trajectory over adaptation epochs, if the run was scored."""
    epochs = [r["epoch"] for r in records]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for key, label in (("os_star", "OS*"), ("unk", "UNK"), ("h", "H")):
        values = [r[key] for r in records]
        if any(v is not None for v in values):
            ax.plot(epochs, values, label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel("score")
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
