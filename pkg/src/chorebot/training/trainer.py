"""Teacher-forced multitask training and offline routing evaluation."""

from __future__ import annotations

import csv
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..grammar import CRParseError, CRPrediction, Vocabulary, parse_cr
from ..model import AdamW, Seq2SeqModel
from ..model.generate import generate_batch
from .datasets import TaskDataset, TaskSample
from .featurize import encode_batch
from .mixing import mixture_probs, sample_mixed_batch


@dataclass
class TrainConfig:
    steps: int = 10_000
    batch_size: int = 256
    lr: float = 1e-4
    warmup_steps: int = 1_000
    label_smoothing: float = 0.1
    cap_ratio: float = 3.0
    seed: int = 0
    shuffle_visual_tokens: bool = True
    feature_noise: float = 0.0
    log_every: int = 50
    metrics_path: Optional[str] = None

    def scaled(self, **overrides) -> "TrainConfig":
        doc = {**self.__dict__, **overrides}
        return TrainConfig(**doc)


@dataclass
class TrainReport:
    steps: int
    final_loss: float
    losses: list[float] = field(default_factory=list)
    task_mix: Counter = field(default_factory=Counter)


def train(
    model: Seq2SeqModel,
    datasets: dict[str, TaskDataset],
    config: TrainConfig,
    vocab: Vocabulary,
) -> TrainReport:
    """Mixed-batch teacher forcing with capped task sampling."""
    if not datasets:
        raise ValueError("no datasets to train on")
    probs = mixture_probs(datasets, config.cap_ratio)
    rng = random.Random(config.seed)
    np_rng = np.random.default_rng(config.seed)
    opt = AdamW(
        model.params, lr=config.lr, warmup_steps=config.warmup_steps, total_steps=config.steps,
    )
    report = TrainReport(steps=config.steps, final_loss=float("nan"))
    writer = None
    fh = None
    if config.metrics_path:
        fh = open(config.metrics_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["step", "loss", "task_mix"])
    try:
        for step in range(1, config.steps + 1):
            samples = sample_mixed_batch(datasets, probs, config.batch_size, rng)
            batch = encode_batch(
                samples, vocab, model.config,
                shuffle_tokens=config.shuffle_visual_tokens, rng=rng,
                noise_sigma=config.feature_noise,
            )
            model.zero_grad()
            loss = model.loss(batch, smoothing=config.label_smoothing, rng=np_rng)
            loss.backward()
            opt.step()
            model.step_counter += 1
            value = float(loss.data)
            report.losses.append(value)
            report.task_mix.update(batch.task_ids)
            if writer and (step % config.log_every == 0 or step == config.steps):
                mix = ";".join(f"{t}:{n}" for t, n in sorted(Counter(batch.task_ids).items()))
                writer.writerow([step, f"{value:.6f}", mix])
    finally:
        if fh:
            fh.close()
    report.final_loss = report.losses[-1] if report.losses else float("nan")
    return report


FINETUNE_TASKS = ("CR", "AE", "VG")


def finetune(
    model: Seq2SeqModel,
    datasets: dict[str, TaskDataset],
    config: TrainConfig,
    vocab: Vocabulary,
    tasks: Optional[Sequence[str]] = None,
    expected_vocab_digest: Optional[str] = None,
) -> TrainReport:
    """Downstream fine-tuning; `tasks` selects the unified (all) or modular
    (single-expert) regime."""
    if expected_vocab_digest is not None and expected_vocab_digest != vocab.digest():
        raise ValueError(
            f"vocabulary digest mismatch: checkpoint {expected_vocab_digest}, got {vocab.digest()}"
        )
    chosen = {t: d for t, d in datasets.items() if tasks is None or t in tasks}
    if not chosen:
        raise ValueError(f"no datasets left after filtering to {tasks}")
    return train(model, chosen, config, vocab)


CR_CLASSES = tuple(f"{route}|{match}" for route in ("act", "search")
                   for match in ("no match", "one match", "multiple matches"))


@dataclass
class CROfflineReport:
    accuracy: float
    macro_f1: float  # percentage, matching the offline evaluation convention
    per_class_f1: dict[str, float]
    n: int

    def table(self) -> list[dict]:
        return [{"Model": "model", "Accuracy": round(self.accuracy, 2), "F1": round(self.macro_f1, 2)}]


def eval_cr_offline(
    model: Seq2SeqModel,
    vocab: Vocabulary,
    samples: Sequence[TaskSample],
    batch_size: int = 64,
    max_len: int = 16,
) -> CROfflineReport:
    """Accuracy over the full structured prediction plus macro-F1 over the
    route x match token classes."""
    predicted: list[str] = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start: start + batch_size]
        batch = encode_batch(chunk, vocab, model.config)
        predicted.extend(generate_batch(model, vocab, batch, max_len=max_len))
    return score_cr_texts([s.target for s in samples], predicted)


def score_cr_texts(gold_texts: Sequence[str], predicted_texts: Sequence[str]) -> CROfflineReport:
    gold: list[CRPrediction] = [parse_cr(t) for t in gold_texts]
    predictions: list[Optional[CRPrediction]] = []
    for text in predicted_texts:
        try:
            predictions.append(parse_cr(text.strip()))
        except CRParseError:
            predictions.append(None)

    exact = sum(1 for g, p in zip(gold, predictions) if p == g)
    accuracy = exact / max(1, len(gold))

    def class_of(pred: Optional[CRPrediction]) -> str:
        if pred is None:
            return "invalid"
        return f"{pred.route.value}|{pred.match.value}"

    gold_classes = [class_of(g) for g in gold]
    pred_classes = [class_of(p) for p in predictions]
    labels = sorted(set(gold_classes) | (set(pred_classes) & set(CR_CLASSES)))
    per_class: dict[str, float] = {}
    for label in labels:
        tp = sum(1 for g, p in zip(gold_classes, pred_classes) if g == label and p == label)
        fp = sum(1 for g, p in zip(gold_classes, pred_classes) if g != label and p == label)
        fn = sum(1 for g, p in zip(gold_classes, pred_classes) if g == label and p != label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per_class[label] = 200.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    macro = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return CROfflineReport(accuracy=accuracy, macro_f1=macro, per_class_f1=per_class, n=len(gold))
