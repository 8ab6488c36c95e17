"""Minimal reverse-mode automatic differentiation over dense float64 arrays.

The computation graph is implicit: every operation returns a fresh Tensor
holding references to its parents and a closure producing the parent
gradients. Construction order is recorded so the backward pass visits nodes
in reverse construction order, which is a valid topological order by
construction.
"""
from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence

import numpy as np

_NODE_COUNTER = itertools.count()


class Tensor:
    """Dense float64 array participating in one computation graph at a time."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_order")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self._order = next(_NODE_COUNTER)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _node(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data)
    out._parents = parents
    out._backward = backward_fn
    return out


def _as_2d(t: Tensor, op: str) -> np.ndarray:
    if t.data.ndim != 2:
        raise ValueError(f"{op} expects a 2-D tensor, got shape {t.data.shape}")
    return t.data


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of two 2-D tensors."""
    da, db = _as_2d(a, "matmul"), _as_2d(b, "matmul")
    if da.shape[1] != db.shape[0]:
        raise ValueError(f"matmul shape mismatch: {da.shape} x {db.shape}")
    return _node(da @ db, (a, b), lambda g: (g @ db.T, da.T @ g))


def transpose(a: Tensor) -> Tensor:
    _as_2d(a, "transpose")
    return _node(a.data.T.copy(), (a,), lambda g: (g.T,))


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; shapes must match exactly."""
    if a.data.shape != b.data.shape:
        raise ValueError(f"add shape mismatch: {a.data.shape} vs {b.data.shape}")
    return _node(a.data + b.data, (a, b), lambda g: (g, g))


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """Row-broadcast addition of a width-n bias to an m-by-n tensor."""
    dx = _as_2d(x, "add_bias")
    if b.data.ndim != 1 or b.data.shape[0] != dx.shape[1]:
        raise ValueError(f"add_bias width mismatch: {dx.shape} + {b.data.shape}")
    return _node(dx + b.data, (x, b), lambda g: (g, g.sum(axis=0)))


def neg(a: Tensor) -> Tensor:
    return _node(-a.data, (a,), lambda g: (-g,))


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; shapes must match exactly."""
    if a.data.shape != b.data.shape:
        raise ValueError(f"mul shape mismatch: {a.data.shape} vs {b.data.shape}")
    da, db = a.data, b.data
    return _node(da * db, (a, b), lambda g: (g * db, g * da))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _node(a.data * c, (a,), lambda g: (g * c,))


def reduce_sum(a: Tensor) -> Tensor:
    """Sum of all entries, as a scalar tensor."""
    shape = a.data.shape
    return _node(np.asarray(a.data.sum()), (a,), lambda g: (np.full(shape, float(g)),))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _node(out, (a,), lambda g: (g * out,))


def relu(a: Tensor) -> Tensor:
    """Elementwise max(0, x); the subgradient at exactly 0 is 0."""
    mask = a.data > 0
    return _node(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def _log_softmax_raw(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def log_softmax(z: Tensor) -> Tensor:
    """Row-wise log softmax, max-subtracted for stability."""
    dz = _as_2d(z, "log_softmax")
    if dz.shape[1] < 2:
        raise ValueError(f"log_softmax needs at least 2 columns, got {dz.shape[1]}")
    ls = _log_softmax_raw(dz)
    p = np.exp(ls)
    return _node(ls, (z,), lambda g: (g - p * g.sum(axis=1, keepdims=True),))


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean over rows of -log_softmax(logits)[label]; fused for stability."""
    dz = _as_2d(logits, "cross_entropy")
    y = np.asarray(labels, dtype=np.int64)
    if y.ndim != 1 or y.shape[0] != dz.shape[0]:
        raise ValueError(f"cross_entropy labels shape {y.shape} does not match {dz.shape[0]} rows")
    c = dz.shape[1]
    if y.size and (y.min() < 0 or y.max() >= c):
        raise ValueError(f"cross_entropy label out of range [0, {c})")
    m = dz.shape[0]
    ls = _log_softmax_raw(dz)
    loss = -ls[np.arange(m), y].mean()
    p = np.exp(ls)
    onehot = np.zeros_like(p)
    onehot[np.arange(m), y] = 1.0

    def backward_fn(g):
        return ((p - onehot) * (float(g) / m),)

    return _node(np.asarray(loss), (logits,), backward_fn)


def row_entropy(z: Tensor) -> Tensor:
    """Shannon entropy of softmax(z) per row, shape m-by-1."""
    dz = _as_2d(z, "row_entropy")
    if dz.shape[1] < 2:
        raise ValueError(f"row_entropy needs at least 2 columns, got {dz.shape[1]}")
    ls = _log_softmax_raw(dz)
    p = np.exp(ls)
    ent = -(p * ls).sum(axis=1, keepdims=True)

    def backward_fn(g):
        return (g * (-(p * (ls + ent))),)

    return _node(ent, (z,), backward_fn)


def entropy(z: Tensor) -> Tensor:
    """Mean over rows of the softmax entropy; each row value lies in [0, ln c]."""
    return scale(reduce_sum(row_entropy(z)), 1.0 / z.data.shape[0])


def drop_columns(z: Tensor, labels) -> Tensor:
    """Per row, remove the column at the row's label, preserving column order."""
    dz = _as_2d(z, "drop_columns")
    y = np.asarray(labels, dtype=np.int64)
    c = dz.shape[1]
    if y.ndim != 1 or y.shape[0] != dz.shape[0]:
        raise ValueError(f"drop_columns labels shape {y.shape} does not match {dz.shape[0]} rows")
    if y.size and (y.min() < 0 or y.max() >= c):
        raise ValueError(f"drop_columns label out of range [0, {c})")
    is_label = np.arange(c)[None, :] == y[:, None]
    keep_idx = np.argsort(is_label, axis=1, kind="stable")[:, : c - 1]
    out = np.take_along_axis(dz, keep_idx, axis=1)

    def backward_fn(g):
        gz = np.zeros_like(dz)
        np.put_along_axis(gz, keep_idx, g, axis=1)
        return (gz,)

    return _node(out, (z,), backward_fn)


def constant(data) -> Tensor:
    """Wrap an array as a graph leaf that never receives gradient."""
    return Tensor(data)


def backward(loss: Tensor) -> None:
    """Populate .grad on every tensor reachable from a scalar loss.

    Repeated calls without clearing grads accumulate, one full gradient per
    call.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.data.shape}")
    nodes: list[Tensor] = []
    seen: set[int] = set()
    stack = [loss]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        nodes.append(node)
        stack.extend(node._parents)
    nodes.sort(key=lambda n: n._order, reverse=True)

    flow: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in nodes:
        g = flow.pop(id(node), None)
        if g is None:
            continue
        if node.grad is None:
            node.grad = np.zeros_like(node.data)
        node.grad = node.grad + g
        if node._backward is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None:
                continue
            pid = id(parent)
            flow[pid] = pg if pid not in flow else flow[pid] + pg


class SGD:
    """Momentum SGD over a fixed parameter list; step() clears grads."""

    def __init__(self, params: Iterable[Tensor], lr: float, momentum: float = 0.9):
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        if momentum < 0:
            raise ValueError(f"momentum must be nonnegative, got {momentum}")
        self.params: Sequence[Tensor] = list(params)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self._velocity = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        for p, v in zip(self.params, self._velocity):
            g = p.grad if p.grad is not None else 0.0
            v *= self.momentum
            v += g
            p.data = p.data - self.lr * v
            p.grad = None

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
