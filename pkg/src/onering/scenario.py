"""Synthetic open-partial scenarios: label-space splits, shifted Gaussian
blobs, CSV feature ingestion, and batch iteration."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

_CENTER_RETRIES = 1000


@dataclass(frozen=True)
class LabelSpaceSplit:
    """Assignment of class IDs to shared / source-private / target-private sets.

    The toy setup deliberately uses an empty source-private set; the strict
    open-partial condition is enforced by split_label_space.
    """

    shared: tuple[int, ...]
    source_private: tuple[int, ...]
    target_private: tuple[int, ...]

    def __post_init__(self):
        groups = (set(self.shared), set(self.source_private), set(self.target_private))
        if not self.shared:
            raise ValueError("shared class set must not be empty")
        if sum(len(g) for g in groups) != len(set().union(*groups)):
            raise ValueError("shared / source-private / target-private sets must be disjoint")

    @property
    def source_classes(self) -> tuple[int, ...]:
        return self.shared + self.source_private

    @property
    def target_classes(self) -> tuple[int, ...]:
        return self.shared + self.target_private

    @property
    def n_known(self) -> int:
        return len(self.source_classes)

    @property
    def all_classes(self) -> tuple[int, ...]:
        return tuple(sorted(self.shared + self.source_private + self.target_private))


def split_label_space(total_classes: int, n_shared: int, n_source_private: int) -> LabelSpaceSplit:
    """Ordered split: first n_shared IDs shared, next n_source_private source
    private, the rest target private. Rejects non-open-partial counts."""
    if n_shared < 1 or n_source_private < 1 or total_classes <= n_shared + n_source_private:
        raise ValueError(
            "open-partial split needs n_shared >= 1, n_source_private >= 1 and "
            f"total_classes > n_shared + n_source_private, got ({total_classes}, "
            f"{n_shared}, {n_source_private})"
        )
    shared = tuple(range(n_shared))
    source_private = tuple(range(n_shared, n_shared + n_source_private))
    target_private = tuple(range(n_shared + n_source_private, total_classes))
    return LabelSpaceSplit(shared, source_private, target_private)


@dataclass
class DomainShiftSpec:
    """Rigid motion plus noise rescaling applied to all target points."""

    rotation: float = 0.0
    translation: np.ndarray | None = None
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.noise_scale <= 0:
            raise ValueError(f"noise_scale must be positive, got {self.noise_scale}")
        if self.translation is not None:
            object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64))


@dataclass
class Dataset:
    """Feature matrix with per-sample labels; target labels feed evaluation only."""

    samples: np.ndarray
    labels: np.ndarray
    domain: str = "source"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape[0] != self.samples.shape[0]:
            raise ValueError("labels length does not match sample count")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


def _circle_centers(class_ids, cluster_std: float) -> dict[int, np.ndarray]:
    k = len(class_ids)
    radius = 3.0 * cluster_std / np.sin(np.pi / k) if k > 1 else 0.0
    angles = 2.0 * np.pi * np.arange(k) / k
    return {
        cls: radius * np.array([np.cos(a), np.sin(a)])
        for cls, a in zip(class_ids, angles)
    }


def _random_centers(class_ids, dim: int, cluster_std: float, rng) -> dict[int, np.ndarray]:
    k = len(class_ids)
    half_side = 4.5 * cluster_std * k ** (1.0 / dim)
    # the first two coordinates live in the rotation plane; keeping them small
    # bounds the rotation-induced displacement to a few cluster widths so the
    # domain shift damages clusters without relocating them wholesale
    scales = np.full(dim, half_side)
    scales[:2] = min(half_side, 3.0 * cluster_std)
    min_dist = 6.0 * cluster_std
    placed: list[np.ndarray] = []
    for cls in class_ids:
        for _ in range(_CENTER_RETRIES):
            candidate = rng.uniform(-1.0, 1.0, size=dim) * scales
            if all(np.linalg.norm(candidate - p) >= min_dist for p in placed):
                placed.append(candidate)
                break
        else:
            raise RuntimeError(
                f"could not place {k} centers at least {min_dist:g} apart "
                f"after {_CENTER_RETRIES} attempts"
            )
    return dict(zip(class_ids, placed))


def _rotation_matrix(dim: int, angle: float) -> np.ndarray:
    rot = np.eye(dim)
    c, s = np.cos(angle), np.sin(angle)
    rot[0, 0], rot[0, 1] = c, -s
    rot[1, 0], rot[1, 1] = s, c
    return rot


def generate_blobs(
    split: LabelSpaceSplit,
    per_class: int,
    dim: int,
    cluster_std: float,
    shift: DomainShiftSpec,
    seed: int,
) -> tuple[Dataset, Dataset]:
    """One isotropic Gaussian cluster per class; the target copy is rotated,
    translated and noise-rescaled. Deterministic per seed."""
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if per_class < 1 or cluster_std <= 0:
        raise ValueError(f"invalid per_class {per_class} / cluster_std {cluster_std}")
    translation = np.zeros(dim) if shift.translation is None else shift.translation
    if translation.shape != (dim,):
        raise ValueError(f"translation shape {translation.shape} does not match dim {dim}")

    rng = np.random.default_rng(seed)
    class_ids = split.all_classes
    if dim == 2:
        centers = _circle_centers(class_ids, cluster_std)
    else:
        centers = _random_centers(class_ids, dim, cluster_std, rng)

    def sample_domain(classes, std, transform):
        xs, ys = [], []
        for cls in classes:
            pts = centers[cls] + rng.normal(0.0, std, size=(per_class, dim))
            xs.append(transform(pts))
            ys.append(np.full(per_class, cls, dtype=np.int64))
        return np.vstack(xs), np.concatenate(ys)

    src_x, src_y = sample_domain(split.source_classes, cluster_std, lambda p: p)
    rot = _rotation_matrix(dim, shift.rotation)
    tgt_x, tgt_y = sample_domain(
        split.target_classes,
        cluster_std * shift.noise_scale,
        lambda p: p @ rot.T + translation,
    )
    return Dataset(src_x, src_y, "source"), Dataset(tgt_x, tgt_y, "target")


def collapse_to_unknown(labels, n_known: int) -> np.ndarray:
    """Map every private class ID (>= n_known) to the single unknown index."""
    y = np.asarray(labels, dtype=np.int64)
    if y.size and y.min() < 0:
        raise ValueError("cannot collapse unlabeled (-1) entries for evaluation")
    return np.minimum(y, n_known)


def load_feature_csv(path, domain: str = "target") -> Dataset:
    """Parse `f0,...,f{d-1},label` rows; label -1 marks unlabeled samples."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        d = len(header) - 1
        expected = [f"f{i}" for i in range(d)] + ["label"]
        if d < 1 or header != expected:
            raise ValueError(f"{path}: line 1: header must be f0,...,f{{d-1}},label")
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d + 1:
                raise ValueError(f"{path}: line {lineno}: expected {d + 1} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row[:-1]])
                labels.append(int(row[-1]))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric cell") from None
    samples = np.asarray(rows, dtype=np.float64).reshape(len(rows), d)
    return Dataset(samples, np.asarray(labels, dtype=np.int64), domain)


def batches(data: Dataset, bs: int, seed: int, epoch: int) -> list[np.ndarray]:
    """Seeded permutation per (seed, epoch), chunked; the short tail batch stays."""
    if bs < 1:
        raise ValueError(f"batch size must be >= 1, got {bs}")
    perm = np.random.default_rng([seed, epoch]).permutation(data.n)
    return [perm[i : i + bs] for i in range(0, data.n, bs)]


@dataclass
class ScenarioConfig:
    """Everything needed to materialize one scenario (blobs or CSV files)."""

    total_classes: int = 9
    n_shared: int = 4
    n_source_private: int = 2
    per_class: int = 100
    dim: int = 8
    cluster_std: float = 0.5
    rotation: float = float(np.pi / 6)
    translation: list[float] | None = None
    noise_scale: float = 1.0
    seed: int = 7
    source_csv: str | None = None
    target_csv: str | None = None

    @property
    def n_target_private(self) -> int:
        return self.total_classes - self.n_shared - self.n_source_private

    def default_translation(self) -> np.ndarray:
        # magnitude 2 * cluster_std along a fixed oblique direction
        vec = np.zeros(self.dim)
        vec[0], vec[1] = 0.6, 0.8
        return vec * 2.0 * self.cluster_std

    def shift(self) -> DomainShiftSpec:
        translation = (
            self.default_translation()
            if self.translation is None
            else np.asarray(self.translation, dtype=np.float64)
        )
        return DomainShiftSpec(self.rotation, translation, self.noise_scale)

    def build(self) -> tuple[LabelSpaceSplit, Dataset, Dataset]:
        split = split_label_space(self.total_classes, self.n_shared, self.n_source_private)
        if self.source_csv or self.target_csv:
            if not (self.source_csv and self.target_csv):
                raise ValueError("source_csv and target_csv must be given together")
            return split, load_feature_csv(self.source_csv, "source"), load_feature_csv(
                self.target_csv, "target"
            )
        source, target = generate_blobs(
            split, self.per_class, self.dim, self.cluster_std, self.shift(), self.seed
        )
        return split, source, target

    def with_target_private(self, count: int) -> "ScenarioConfig":
        return replace(self, total_classes=self.n_shared + self.n_source_private + count)
