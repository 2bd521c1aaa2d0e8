"""Finite-difference verification of the analytic backward pass."""

from __future__ import annotations

import numpy as np

from .config import EncodedBatch
from .network import Seq2SeqModel


def grad_check(
    model: Seq2SeqModel,
    batch: EncodedBatch,
    eps: float = 1e-5,
    num_coords: int = 220,
    seed: int = 0,
    smoothing: float = 0.0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples at least one coordinate from every parameter tensor (so every
    layer type is exercised) plus extra random coordinates up to num_coords.
    Dropout must stay disabled: the loss is evaluated without an rng.
    """
    rng = np.random.default_rng(seed)
    model.zero_grad()
    loss = model.loss(batch, smoothing)
    loss.backward()
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in model.params.items()
    }

    names = sorted(model.params)
    coords: list[tuple[str, int]] = []
    for name in names:
        coords.append((name, int(rng.integers(model.params[name].data.size))))
    while len(coords) < num_coords:
        name = names[int(rng.integers(len(names)))]
        coords.append((name, int(rng.integers(model.params[name].data.size))))

    def loss_value() -> float:
        return float(model.loss(batch, smoothing).data)

    worst = 0.0
    for name, flat_idx in coords:
        data = model.params[name].data
        original = data.flat[flat_idx]
        data.flat[flat_idx] = original + eps
        f_plus = loss_value()
        data.flat[flat_idx] = original - eps
        f_minus = loss_value()
        data.flat[flat_idx] = original
        numeric = (f_plus - f_minus) / (2.0 * eps)
        a = analytic[name].flat[flat_idx]
        rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
        worst = max(worst, rel)
    return worst
