"""AdamW with a linear warmup / linear decay schedule and gradient clipping."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor


class AdamW:
    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 3e-4,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
        warmup_steps: int = 0,
        total_steps: int = 0,
        clip_norm: float = 1.0,
    ):
        self.params = params
        self.base_lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.warmup_steps = warmup_steps
        self.total_steps = total_steps
        self.clip_norm = clip_norm
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def current_lr(self) -> float:
        step = self.t + 1
        lr = self.base_lr
        if self.warmup_steps > 0 and step <= self.warmup_steps:
            return lr * step / self.warmup_steps
        if self.total_steps > self.warmup_steps:
            frac = (step - self.warmup_steps) / max(1, self.total_steps - self.warmup_steps)
            return lr * max(0.0, 1.0 - frac)
        return lr

    def step(self) -> float:
        lr = self.current_lr()
        self.t += 1
        b1, b2 = self.betas
        if self.clip_norm > 0:
            total = 0.0
            for p in self.params.values():
                if p.grad is not None:
                    total += float((p.grad**2).sum())
            norm = np.sqrt(total)
            scale = min(1.0, self.clip_norm / (norm + 1e-12))
        else:
            scale = 1.0
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad * scale
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            update = m_hat / (np.sqrt(v_hat) + self.eps)
            if self.weight_decay > 0 and not name.endswith(".b") and ".ln" not in name:
                update = update + self.weight_decay * p.data
            p.data = p.data - lr * update
        return lr
