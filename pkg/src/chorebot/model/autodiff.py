"""Minimal reverse-mode automatic differentiation over numpy arrays.

Every operation carries a hand-derived vector-Jacobian product; the tape is
just a topological walk over the recorded graph. Double precision throughout
so the finite-difference checker can hold the whole stack to tight
tolerances.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

Array = np.ndarray


class Tensor:
    __slots__ = ("data", "grad", "parents", "backward_fn", "requires_grad")

    def __init__(
        self,
        data: Array,
        parents: tuple["Tensor", ...] = (),
        backward_fn: Optional[Callable[[Array], tuple[Optional[Array], ...]]] = None,
        requires_grad: bool = False,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[Array] = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def backward(self, seed: Optional[Array] = None) -> None:
        if seed is None:
            seed = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node.parents:
                stack.append((parent, False))
        self.grad = np.asarray(seed, dtype=np.float64)
        for node in reversed(order):
            if node.backward_fn is None or node.grad is None:
                continue
            grads = node.backward_fn(node.grad)
            for parent, g in zip(node.parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g


def parameter(data: Array) -> Tensor:
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)


def constant(data: Array) -> Tensor:
    return Tensor(np.asarray(data, dtype=np.float64))


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a: Tensor, b: Tensor) -> Tensor:
    out = a.data + b.data

    def bwd(g: Array):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor(out, (a, b), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data * b.data

    def bwd(g: Array):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor(out, (a, b), bwd)


def scale(a: Tensor, s: float) -> Tensor:
    return Tensor(a.data * s, (a,), lambda g: (g * s,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data @ b.data

    def bwd(g: Array):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor(out, (a, b), bwd)


def transpose(a: Tensor, ax1: int, ax2: int) -> Tensor:
    out = np.swapaxes(a.data, ax1, ax2)
    return Tensor(out, (a,), lambda g: (np.swapaxes(g, ax1, ax2),))


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    original = a.data.shape
    return Tensor(a.data.reshape(shape), (a,), lambda g: (g.reshape(original),))


def concat(tensors: list[Tensor], axis: int) -> Tensor:
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g: Array):
        slicer = [slice(None)] * g.ndim
        grads = []
        for i in range(len(sizes)):
            slicer[axis] = slice(offsets[i], offsets[i + 1])
            grads.append(g[tuple(slicer)])
        return tuple(grads)

    return Tensor(out, tuple(tensors), bwd)


def gather(table: Tensor, indices: Array) -> Tensor:
    """Row lookup (embedding): out[..., :] = table[indices[...], :]."""
    idx = np.asarray(indices)
    out = table.data[idx]

    def bwd(g: Array):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx.reshape(-1), g.reshape(-1, table.data.shape[-1]))
        return (gt,)

    return Tensor(out, (table,), bwd)


def reduce_sum(a: Tensor) -> Tensor:
    out = np.asarray(a.data.sum())
    return Tensor(out, (a,), lambda g: (np.broadcast_to(g, a.shape).astype(np.float64),))


def sum_axis(a: Tensor, axis: int) -> Tensor:
    out = a.data.sum(axis=axis)

    def bwd(g: Array):
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape),)

    return Tensor(out, (a,), bwd)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=axis, keepdims=True)

    def bwd(g: Array):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - dot),)

    return Tensor(out, (a,), bwd)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gain.data + bias.data
    n = x.data.shape[-1]

    def bwd(g: Array):
        dxhat = g * gain.data
        dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        ggain = _unbroadcast(g * xhat, gain.shape)
        gbias = _unbroadcast(g, bias.shape)
        return dx, ggain, gbias

    del n
    return Tensor(out, (x, gain, bias), bwd)


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x: Tensor) -> Tensor:
    xd = x.data
    x_sq = xd * xd
    t = np.tanh(_GELU_C * (xd + 0.044715 * x_sq * xd))
    out = 0.5 * xd * (1.0 + t)

    def bwd(g: Array):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * x_sq)
        dx = 0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * dinner
        return (g * dx,)

    return Tensor(out, (x,), bwd)


def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout; identity when rate is 0 or no rng is supplied."""
    if rate <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    return mul(x, constant(keep))


def cross_entropy(logits: Tensor, targets: Array, weights: Array, smoothing: float = 0.0) -> Tensor:
    """Weighted label-smoothed cross-entropy summed over all positions.

    `weights` carries the full normalization (zero on padding), so the output
    is the final scalar loss. Gradient: w * (p - q) with q the smoothed
    target distribution.
    """
    idx = np.asarray(targets)
    w = np.asarray(weights, dtype=np.float64)
    shifted = logits.data - logits.data.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_probs = shifted - logz
    v = logits.data.shape[-1]
    gold = np.take_along_axis(log_probs, idx[..., None], axis=-1)[..., 0]
    if smoothing > 0.0:
        per_pos = -(1.0 - smoothing) * gold - smoothing * log_probs.mean(axis=-1)
    else:
        per_pos = -gold
    total = (per_pos * w).sum()

    def bwd(g: Array):
        p = np.exp(log_probs)
        q = np.zeros_like(p)
        np.put_along_axis(q, idx[..., None], 1.0 - smoothing, axis=-1)
        q += smoothing / v
        return ((p - q) * w[..., None] * g,)

    return Tensor(np.asarray(total), (logits,), bwd)
