"""MLP feature extractor plus the spare-dimension classification head.

The head has n_known + 1 outputs; the last index is the unknown dimension.
A plain n-way head (include_unknown=False) exists only for the
entropy-threshold baseline and the toy comparison model.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from onering.autodiff import Tensor, add_bias, matmul, relu

_CKPT_MAGIC = "onering-ckpt-v1"


@dataclass
class OneRingModel:
    layers: list[tuple[Tensor, Tensor]]  # extractor (weight, bias) pairs, relu between
    head_w: Tensor = field(repr=False, default=None)
    head_b: Tensor = field(repr=False, default=None)
    n_known: int = 0
    include_unknown: bool = True
    seed: int = 0

    def __post_init__(self):
        out_width = self.head_w.data.shape[1]
        expected = self.n_known + 1 if self.include_unknown else self.n_known
        if out_width != expected:
            raise ValueError(f"head width {out_width} does not match {expected} outputs")
        if self.layers[-1][0].data.shape[1] != self.head_w.data.shape[0]:
            raise ValueError("extractor output width does not match head input width")

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].data.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.layers[-1][0].data.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.head_w.data.shape[1]

    @property
    def unknown_index(self) -> int:
        return self.n_known

    @property
    def extractor_params(self) -> list[Tensor]:
        return [t for pair in self.layers for t in pair]

    @property
    def head_params(self) -> list[Tensor]:
        return [self.head_w, self.head_b]

    @property
    def parameters(self) -> list[Tensor]:
        return self.extractor_params + self.head_params

    @property
    def widths(self) -> list[int]:
        return [self.input_dim] + [w.data.shape[1] for w, _ in self.layers] + [self.n_outputs]


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


def init_model(
    input_dim: int,
    n_known: int,
    hidden: tuple[int, ...] = (64, 64),
    feature_dim: int = 32,
    seed: int = 0,
    include_unknown: bool = True,
) -> OneRingModel:
    """Build a model with uniform(-a, a) weights, a = sqrt(6/(fan_in+fan_out)), zero biases."""
    widths = [input_dim, *hidden, feature_dim]
    if any(w < 1 for w in widths) or n_known < 1:
        raise ValueError(f"invalid widths {widths} / n_known {n_known}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        w = Tensor(_glorot(rng, fan_in, fan_out), requires_grad=True)
        b = Tensor(np.zeros(fan_out), requires_grad=True)
        layers.append((w, b))
    out_width = n_known + 1 if include_unknown else n_known
    head_w = Tensor(_glorot(rng, feature_dim, out_width), requires_grad=True)
    head_b = Tensor(np.zeros(out_width), requires_grad=True)
    return OneRingModel(
        layers=layers,
        head_w=head_w,
        head_b=head_b,
        n_known=n_known,
        include_unknown=include_unknown,
        seed=seed,
    )


def forward(model: OneRingModel, x) -> tuple[Tensor, Tensor]:
    """One pass from inputs to (pre-head features, head logits)."""
    h = x if isinstance(x, Tensor) else Tensor(x)
    if h.data.ndim != 2 or h.data.shape[1] != model.input_dim:
        raise ValueError(f"input shape {h.data.shape} does not match input_dim {model.input_dim}")
    for i, (w, b) in enumerate(model.layers):
        h = add_bias(matmul(h, w), b)
        if i < len(model.layers) - 1:
            h = relu(h)
    logits = add_bias(matmul(h, model.head_w), model.head_b)
    return h, logits


def predict(logits) -> np.ndarray:
    """Row argmax; ties break to the lowest index. Index n_known means unknown."""
    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    return data.argmax(axis=1)


def runner_up(logits) -> np.ndarray:
    """Index of the second-largest logit per row, same tie rule as predict."""
    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    if data.shape[1] < 2:
        raise ValueError("runner_up needs at least 2 columns")
    top = data.argmax(axis=1)
    masked = data.copy()
    masked[np.arange(data.shape[0]), top] = -np.inf
    return masked.argmax(axis=1)


def softmax_probs(logits) -> np.ndarray:
    """Row-wise softmax of plain arrays, outside any gradient graph."""
    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    shifted = data - data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def save_checkpoint(model: OneRingModel, path) -> None:
    """Write header (widths, n_known, seed) plus row-major float64 parameter blobs."""
    header = {
        "format": _CKPT_MAGIC,
        "widths": model.widths,
        "n_known": model.n_known,
        "include_unknown": model.include_unknown,
        "seed": model.seed,
    }
    blobs = []
    for w, b in [*model.layers, (model.head_w, model.head_b)]:
        blobs.append(np.ascontiguousarray(w.data).tobytes())
        blobs.append(np.ascontiguousarray(b.data).tobytes())
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> OneRingModel:
    """Bit-exact inverse of save_checkpoint."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        raw = fh.read()
    header = json.loads(header_line.decode("ascii"))
    if header.get("format") != _CKPT_MAGIC:
        raise ValueError(f"not a model checkpoint: {path}")
    widths = header["widths"]
    offset = 0

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape))
        arr = np.frombuffer(raw, dtype=np.float64, count=count, offset=offset).reshape(shape)
        offset += count * 8
        return arr.copy()

    layers = []
    for fan_in, fan_out in zip(widths[:-2], widths[1:-1]):
        w = Tensor(take((fan_in, fan_out)), requires_grad=True)
        b = Tensor(take((fan_out,)), requires_grad=True)
        layers.append((w, b))
    head_w = Tensor(take((widths[-2], widths[-1])), requires_grad=True)
    head_b = Tensor(take((widths[-1],)), requires_grad=True)
    return OneRingModel(
        layers=layers,
        head_w=head_w,
        head_b=head_b,
        n_known=header["n_known"],
        include_unknown=header["include_unknown"],
        seed=header["seed"],
    )
