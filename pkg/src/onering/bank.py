"""Memory bank of normalized target features and softmax predictions."""
from __future__ import annotations

import numpy as np

_NORM_FLOOR = 1e-12


class MemoryBank:
    """One row per target sample: unit-norm feature, softmax prediction, staleness.

    Rows are meaningful only after a first update pass; the trainer fills the
    whole bank with a forward pass before any retrieval.
    """

    def __init__(self, n_samples: int, feature_dim: int, n_outputs: int):
        if n_samples < 1:
            raise ValueError(f"bank needs at least one sample, got {n_samples}")
        self.features = np.zeros((n_samples, feature_dim))
        self.predictions = np.full((n_samples, n_outputs), 1.0 / n_outputs)
        self.staleness = np.zeros(n_samples, dtype=np.int64)

    @property
    def size(self) -> int:
        return self.features.shape[0]

    def age(self) -> None:
        self.staleness += 1


def normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.maximum(norms, _NORM_FLOOR)


def update_bank(bank: MemoryBank, indices, features, predictions) -> None:
    """Replace rows with L2-normalized features and softmax predictions."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= bank.size):
        raise IndexError(f"bank index out of range [0, {bank.size})")
    bank.features[idx] = normalize_rows(np.asarray(features, dtype=np.float64))
    bank.predictions[idx] = np.asarray(predictions, dtype=np.float64)
    bank.staleness[idx] = 0


def knn_batch(bank: MemoryBank, queries: np.ndarray, k: int, exclude_indices=None) -> np.ndarray:
    """Row indices of the k most cosine-similar bank entries per query row.

    Ties break to the lower index; exclude_indices masks each query's own
    bank row.
    """
    max_k = bank.size - (0 if exclude_indices is None else 1)
    if k < 1 or k > max_k:
        raise ValueError(f"k={k} out of range for bank of size {bank.size}")
    q = normalize_rows(np.atleast_2d(np.asarray(queries, dtype=np.float64)))
    sims = q @ bank.features.T
    if exclude_indices is not None:
        sims[np.arange(q.shape[0]), np.asarray(exclude_indices, dtype=np.int64)] = -np.inf
    # stable sort keeps ascending index order among equal similarities
    order = np.argsort(-sims, axis=1, kind="stable")
    return order[:, :k]


def knn(bank: MemoryBank, query_feature, k: int, exclude_index: int | None = None) -> np.ndarray:
    excl = None if exclude_index is None else [exclude_index]
    return knn_batch(bank, np.asarray(query_feature)[None, :], k, excl)[0]
