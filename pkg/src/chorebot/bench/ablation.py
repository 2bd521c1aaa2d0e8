"""Data-ablation curves: downsample action-execution data, hold grounding."""

from __future__ import annotations

import csv
import random
from pathlib import Path
from typing import Callable, Sequence

from ..training.datasets import TaskDataset

TrainFn = Callable[[dict[str, TaskDataset], int], object]  # -> agent factory
EvalFn = Callable[[object], float]  # agent factory -> MSR


def downsample_ae(
    datasets: dict[str, TaskDataset],
    fraction: float,
    keep_grounding: bool,
    seed: int = 0,
) -> dict[str, TaskDataset]:
    """Keep only `fraction` of the AE samples; grounding (and everything
    else) stays intact when keep_grounding is set."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    rng = random.Random(seed)
    out: dict[str, TaskDataset] = {}
    for task, dataset in datasets.items():
        if task == "AE" and fraction < 1.0:
            k = max(1, round(len(dataset.samples) * fraction))
            kept = rng.sample(dataset.samples, k)
            out[task] = TaskDataset(task, kept)
        elif task == "VG" and not keep_grounding and fraction < 1.0:
            k = max(1, round(len(dataset.samples) * fraction))
            out[task] = TaskDataset(task, rng.sample(dataset.samples, k))
        else:
            out[task] = dataset
    return out


def ablation_run(
    datasets: dict[str, TaskDataset],
    train_fn: TrainFn,
    eval_fn: EvalFn,
    fractions: Sequence[float],
    keep_grounding: bool = True,
    seeds: Sequence[int] = (0,),
    baseline_datasets: dict[str, TaskDataset] | None = None,
) -> list[dict]:
    """One (fraction, msr, seed) row per trained model, plus optional
    no-augmentation baseline rows labeled fraction='baseline'."""
    rows: list[dict] = []
    for fraction in fractions:
        for seed in seeds:
            reduced = downsample_ae(datasets, fraction, keep_grounding, seed)
            agent_factory = train_fn(reduced, seed)
            rows.append({"fraction": fraction, "msr": eval_fn(agent_factory), "seed": seed})
    if baseline_datasets is not None:
        for seed in seeds:
            agent_factory = train_fn(baseline_datasets, seed)
            rows.append({"fraction": "baseline", "msr": eval_fn(agent_factory), "seed": seed})
    return rows


def write_curve(rows: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fraction", "msr", "seed"])
        for row in rows:
            writer.writerow([row["fraction"], row["msr"], row["seed"]])
