"""The three training objectives: dual-CE source loss, weighted entropy
minimization, and the neighbor-attraction/batch-dispersion composite.

Partition membership (known vs unknown) always comes from the current argmax
predictions and carries no gradient; only the entropy/dot-product terms are
differentiated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from onering import bank as _bank
from onering.autodiff import (
    Tensor,
    add,
    constant,
    cross_entropy,
    drop_columns,
    exp,
    log_softmax,
    matmul,
    mul,
    neg,
    reduce_sum,
    row_entropy,
    scale,
    transpose,
)

MODE_BATCH = "batch"
MODE_DATASET = "dataset"


@dataclass(frozen=True)
class RatioEstimate:
    """Counts of known- vs unknown-predicted samples over a population."""

    n_known_hat: int
    n_unknown_hat: int
    population: int
    mode: str = MODE_BATCH

    def __post_init__(self):
        if self.n_known_hat < 0 or self.n_unknown_hat < 0:
            raise ValueError("ratio counts must be nonnegative")
        if self.n_known_hat + self.n_unknown_hat != self.population:
            raise ValueError(
                f"counts {self.n_known_hat}+{self.n_unknown_hat} != population {self.population}"
            )
        if self.mode not in (MODE_BATCH, MODE_DATASET):
            raise ValueError(f"unknown ratio mode {self.mode!r}")


@dataclass(frozen=True)
class AadConfig:
    """Neighbor count and diversity weight for the augmented objective."""

    k: int = 3
    beta: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")


def estimate_ratio(predictions, unknown_index: int, mode: str = MODE_BATCH,
                   dataset_predictions=None) -> RatioEstimate:
    """Count known vs unknown predictions over the batch or the whole dataset."""
    if mode == MODE_DATASET:
        if dataset_predictions is None:
            raise ValueError("dataset mode needs dataset-level predictions")
        pool = np.asarray(dataset_predictions)
    else:
        pool = np.asarray(predictions)
    if pool.size == 0:
        raise ValueError("cannot estimate a ratio from zero predictions")
    n_unknown = int((pool == unknown_index).sum())
    return RatioEstimate(pool.size - n_unknown, n_unknown, pool.size, mode)


def masked_logits(logits: Tensor, labels) -> Tensor:
    """Drop each row's ground-truth column; the unknown column becomes last."""
    width = logits.data.shape[1]
    y = np.asarray(labels, dtype=np.int64)
    if y.size and y.max() >= width - 1:
        raise ValueError(f"label equals the unknown index {width - 1}")
    return drop_columns(logits, y)


def source_loss(logits: Tensor, labels, lam: float = 1.0) -> Tensor:
    """Cross entropy on the full row plus lam times cross entropy that pushes
    the unknown column to the top of the label-masked row."""
    ce = cross_entropy(logits, labels)
    if lam == 0.0:
        return ce
    reduced = masked_logits(logits, labels)
    unknown_col = np.full(reduced.data.shape[0], reduced.data.shape[1] - 1, dtype=np.int64)
    return add(ce, scale(cross_entropy(reduced, unknown_col), lam))


def _partition_masks(logits_data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    preds = logits_data.argmax(axis=1)
    unknown = preds == logits_data.shape[1] - 1
    return ~unknown, unknown


def _weighted_partition_sum(rows: Tensor, masks_counts, bs: int) -> Tensor:
    """Sum of (bs / n_hat) * mean(rows over partition) across partitions.

    A partition with zero batch members or a zero population count
    contributes nothing.
    """
    total = None
    for mask, n_hat in masks_counts:
        members = int(mask.sum())
        if members == 0 or n_hat == 0:
            continue
        picked = reduce_sum(mul(rows, constant(mask[:, None].astype(np.float64))))
        term = scale(picked, (bs / n_hat) / members)
        total = term if total is None else add(total, term)
    return total if total is not None else constant(np.asarray(0.0))


def weighted_entropy_loss(logits: Tensor, ratio: RatioEstimate) -> Tensor:
    """Entropy of each partition, weighted by the reciprocal of its
    predicted population share."""
    bs = logits.data.shape[0]
    known_mask, unknown_mask = _partition_masks(logits.data)
    ent = row_entropy(logits)
    return _weighted_partition_sum(
        ent,
        ((known_mask, ratio.n_known_hat), (unknown_mask, ratio.n_unknown_hat)),
        bs,
    )


def aad_loss(
    features: Tensor,
    logits: Tensor,
    bank: _bank.MemoryBank,
    cfg: AadConfig,
    ratio: RatioEstimate,
    indices=None,
) -> Tensor:
    """Weighted entropy plus neighbor attraction, with batch dispersion
    applied only to known-predicted rows.

    Neighbor retrieval uses cosine similarity of L2-normalized features
    against the bank; bank-side predictions are constants. `indices` are the
    batch rows' own bank ids, excluded from their neighbor sets.
    """
    if bank.size < cfg.k + 1:
        raise ValueError(f"bank of size {bank.size} cannot serve k={cfg.k} neighbors")
    bs, width = logits.data.shape
    neighbor_idx = _bank.knn_batch(bank, features.data, cfg.k, indices)
    neighbor_pred_sum = bank.predictions[neighbor_idx].sum(axis=1)  # (bs, width), constant

    probs = exp(log_softmax(logits))
    ones_col = constant(np.ones((width, 1)))
    dis = neg(matmul(mul(probs, constant(neighbor_pred_sum)), ones_col))  # (bs, 1)

    gram = matmul(probs, transpose(probs))
    off_diag = constant(1.0 - np.eye(bs))
    div = scale(matmul(mul(gram, off_diag), constant(np.ones((bs, 1)))), cfg.beta)

    ent = row_entropy(logits)
    known_mask, unknown_mask = _partition_masks(logits.data)
    known_rows = add(add(ent, dis), div)
    unknown_rows = add(ent, dis)
    known_term = _weighted_partition_sum(known_rows, ((known_mask, ratio.n_known_hat),), bs)
    unknown_term = _weighted_partition_sum(unknown_rows, ((unknown_mask, ratio.n_unknown_hat),), bs)
    return add(known_term, unknown_term)
