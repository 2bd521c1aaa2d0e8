"""Capped mixed-batch task sampling.

Task probabilities are proportional to each task's sample count, capped at R
times the smallest task, which keeps low-resource tasks from drowning:
p_i = min(n_i, R * n_min) / sum_j min(n_j, R * n_min).
"""

from __future__ import annotations

import random
from typing import Sequence

from .datasets import TaskDataset, TaskSample


def compute_task_probs(counts: Sequence[int], cap_ratio: float) -> list[float]:
    if not counts:
        raise ValueError("no tasks to mix")
    if any(n <= 0 for n in counts):
        raise ValueError("every task needs at least one sample")
    if cap_ratio < 1:
        raise ValueError("cap ratio must be >= 1")
    n_min = min(counts)
    capped = [min(n, cap_ratio * n_min) for n in counts]
    total = sum(capped)
    return [c / total for c in capped]


def sample_mixed_batch(
    datasets: dict[str, TaskDataset],
    probs: dict[str, float],
    batch_size: int,
    rng: random.Random | int,
) -> list[TaskSample]:
    """Each batch slot independently draws a task by probability, then a
    sample uniformly within that task."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    task_ids = sorted(datasets)
    weights = [probs[t] for t in task_ids]
    batch: list[TaskSample] = []
    for _ in range(batch_size):
        task = rng.choices(task_ids, weights=weights, k=1)[0]
        samples = datasets[task].samples
        batch.append(samples[rng.randrange(len(samples))])
    return batch


def mixture_probs(datasets: dict[str, TaskDataset], cap_ratio: float) -> dict[str, float]:
    task_ids = sorted(datasets)
    probs = compute_task_probs([datasets[t].count for t in task_ids], cap_ratio)
    return dict(zip(task_ids, probs))
