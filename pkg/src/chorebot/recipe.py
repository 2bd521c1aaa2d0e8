"""The desk-scale experiment recipe: data, vocabulary, pretraining,
fine-tuning, and the evaluation battery.

Everything is seeded; a RecipeConfig fully determines the run. The CLI train
command, the experiment scripts, and the acceptance suite all drive this
module.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .agent import ModelAgent, ModelBundle, QAMode
from .data import build_missions
from .data.pipeline import build_finetune_data, worlds_for_augs
from .data.visual_augs import aug_to_task_samples, gen_visual_augs, negativize_all
from .grammar import ALL_SENTINELS, Vocabulary, parse_actions, train_bpe
from .grammar.actions import ActionParseError
from .model import ModelConfig, Seq2SeqModel
from .model.generate import generate_batch
from .training import (
    TaskDataset,
    TaskSample,
    TrainConfig,
    build_pretrain_dataset,
    eval_cr_offline,
    finetune,
    group_by_task,
    sample_scenes,
    train,
)
from .training.featurize import encode_batch

SINGLE_GOAL_CATEGORIES = ("toggleDevice", "scanObject", "breakObject")


@dataclass
class RecipeConfig:
    seed: int = 0
    vocab_size: int = 1024
    d_model: int = 64
    d_ff: int = 128
    heads: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    dropout: float = 0.1

    pretrain_layouts: int = 8
    pretrain_scenes: int = 160
    pretrain_per_task: int = 700
    pretrain_steps: int = 500
    pretrain_batch: int = 32
    pretrain_lr: float = 8e-4

    train_missions_per_category: int = 6
    aug_layouts: int = 8
    aug_caps: dict = field(default_factory=lambda: {
        "break": 160, "clean": 110, "close": 160, "fill": 160, "goto": 220, "open": 160,
        "pickup": 220, "place": 220, "pour": 160, "scan": 110, "search": 260, "toggle": 160,
    })
    finetune_steps: int = 1800
    finetune_batch: int = 32
    finetune_lr: float = 6e-4
    label_smoothing: float = 0.1
    cap_ratio: float = 3.0
    noaug_finetune_steps: int = 700

    eval_missions_per_category: int = 10
    eval_ambiguous_missions: int = 18
    eval_holdout_caps: int = 14

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class TrainedArtifacts:
    vocab: Vocabulary
    model: Seq2SeqModel
    noaug_model: Optional[Seq2SeqModel]
    pretrain_report: object
    finetune_report: object
    datasets: dict[str, TaskDataset]
    noaug_datasets: dict[str, TaskDataset]

    def bundle(self) -> ModelBundle:
        return ModelBundle.unified(self.vocab, self.model)

    def noaug_bundle(self) -> ModelBundle:
        return ModelBundle.unified(self.vocab, self.noaug_model)


def corpus_lines(sample_sets: Sequence[Sequence[TaskSample]]) -> list[str]:
    lines: list[str] = []
    for samples in sample_sets:
        for sample in samples:
            lines.append(sample.text)
            lines.append(sample.target)
    return lines


def build_training_world(config: RecipeConfig):
    """Datasets + vocabulary for one seed (pretrain corpus and fine-tune data)."""
    rng = random.Random(config.seed)
    scenes = []
    for world in worlds_for_augs(config.pretrain_layouts, rng):
        scenes.extend(sample_scenes(world, config.pretrain_scenes // config.pretrain_layouts, rng))
    per_task = {t: config.pretrain_per_task for t in
                ("MLM", "ITM", "Caption", "DenseCaption", "VG", "VQA", "Relation")}
    pretrain_samples = build_pretrain_dataset(scenes, per_task, rng)

    missions = build_missions(
        {c: config.train_missions_per_category for c in (
            "pickup&deliver", "clean&deliver", "fill&deliver", "breakObject",
            "toggleDevice", "pourContainer", "scanObject", "insertInDevice")},
        seed=config.seed + 1000,
    )
    finetune_sets = build_finetune_data(
        missions, num_aug_layouts=config.aug_layouts, caps=config.aug_caps,
        seed=config.seed + 2000,
    )
    noaug_sets = build_finetune_data(missions, seed=config.seed + 2000,
                                     include_augmentations=False)

    vocab = train_bpe(
        corpus_lines([pretrain_samples] + [d.samples for d in finetune_sets.values()]),
        target_size=max(config.vocab_size, 256 + len(ALL_SENTINELS) + 16),
    )
    return vocab, group_by_task(pretrain_samples), finetune_sets, noaug_sets


def train_recipe(config: RecipeConfig, train_noaug: bool = True,
                 metrics_dir: Optional[Path] = None) -> TrainedArtifacts:
    vocab, pretrain_sets, finetune_sets, noaug_sets = build_training_world(config)
    model_config = ModelConfig(
        vocab_size=vocab.size, enc_layers=config.enc_layers, dec_layers=config.dec_layers,
        heads=config.heads, d_model=config.d_model, d_ff=config.d_ff, dropout=config.dropout,
    )
    model = Seq2SeqModel(model_config, seed=config.seed)

    def metrics_path(name: str) -> Optional[str]:
        if metrics_dir is None:
            return None
        metrics_dir.mkdir(parents=True, exist_ok=True)
        return str(metrics_dir / f"{name}.csv")

    pretrain_report = train(model, pretrain_sets, TrainConfig(
        steps=config.pretrain_steps, batch_size=config.pretrain_batch, lr=config.pretrain_lr,
        warmup_steps=max(10, config.pretrain_steps // 20), label_smoothing=0.0,
        cap_ratio=config.cap_ratio, seed=config.seed, shuffle_visual_tokens=True,
        metrics_path=metrics_path("pretrain"),
    ), vocab)

    import copy

    pretrained_params = {k: p.data.copy() for k, p in model.params.items()}

    finetune_report = finetune(model, finetune_sets, TrainConfig(
        steps=config.finetune_steps, batch_size=config.finetune_batch, lr=config.finetune_lr,
        warmup_steps=max(20, config.finetune_steps // 20),
        label_smoothing=config.label_smoothing, cap_ratio=config.cap_ratio,
        seed=config.seed, shuffle_visual_tokens=True,
        metrics_path=metrics_path("finetune"),
    ), vocab)

    noaug_model = None
    if train_noaug:
        noaug_model = Seq2SeqModel(model_config, seed=config.seed)
        for name, param in noaug_model.params.items():
            param.data = pretrained_params[name].copy()
        finetune(noaug_model, noaug_sets, TrainConfig(
            steps=config.noaug_finetune_steps, batch_size=config.finetune_batch,
            lr=config.finetune_lr, warmup_steps=max(20, config.noaug_finetune_steps // 20),
            label_smoothing=config.label_smoothing, cap_ratio=config.cap_ratio,
            seed=config.seed, shuffle_visual_tokens=True,
        ), vocab)
    del copy
    return TrainedArtifacts(
        vocab=vocab, model=model, noaug_model=noaug_model,
        pretrain_report=pretrain_report, finetune_report=finetune_report,
        datasets=finetune_sets, noaug_datasets=noaug_sets,
    )


# -- evaluation battery ------------------------------------------------------------


def holdout_eval_samples(config: RecipeConfig) -> dict[str, TaskDataset]:
    """Held-out single-step samples from fresh layouts (never trained on)."""
    rng = random.Random(config.seed + 9000)
    worlds = worlds_for_augs(6, rng)
    caps = {k: config.eval_holdout_caps for k in config.aug_caps}
    augs, _ = gen_visual_augs(worlds, caps, rng)
    samples: list[TaskSample] = []
    for aug in augs:
        samples.extend(aug_to_task_samples(aug, rng))
    samples = negativize_all(samples, 0.5, rng)
    return group_by_task(samples)


def eval_action_accuracy(bundle: ModelBundle, samples: Sequence[TaskSample],
                         batch_size: int = 64, shuffle_seed: int = 1234) -> float:
    """Exact-action match: verb, resolved object (or room), frame usage.

    Visual token identities are re-shuffled (seeded) so a model cannot score
    by emitting the most frequent id; it must read identity from the input.
    """
    if not samples:
        return 0.0
    from .training.featurize import shuffle_sample_tokens

    rng = random.Random(shuffle_seed)
    samples = [shuffle_sample_tokens(s, rng) for s in samples]
    correct = 0
    model = bundle.act_model
    for start in range(0, len(samples), batch_size):
        chunk = samples[start: start + batch_size]
        batch = encode_batch(chunk, bundle.vocab, model.config)
        outputs = generate_batch(model, bundle.vocab, batch, max_len=20)
        for sample, output in zip(chunk, outputs):
            if _action_matches(sample, output):
                correct += 1
    return correct / len(samples)


def _action_matches(sample: TaskSample, output: str) -> bool:
    try:
        gold_phrases, _ = parse_actions(sample.target, require_stop=False)
        pred_phrases, _ = parse_actions(output.strip(), require_stop=False)
    except ActionParseError:
        return False
    if not gold_phrases or not pred_phrases:
        return False
    gold, pred = gold_phrases[0], pred_phrases[0]
    if gold.verb != pred.verb:
        return False
    token_to_object = {
        (frame.frame_id, region.token): region.object_id
        for frame in sample.frames
        for region in frame.regions
    }
    if gold.frame is not None:
        gold_obj = token_to_object.get((gold.frame, gold.visual))
        pred_obj = token_to_object.get((pred.frame, pred.visual)) if pred.frame is not None else None
        return gold_obj is not None and gold_obj == pred_obj
    return pred.object_name == gold.object_name and pred.frame is None


def eval_vg_accuracy(bundle: ModelBundle, samples: Sequence[TaskSample],
                     batch_size: int = 64, shuffle_seed: int = 4321) -> float:
    """Exact-match grounding accuracy (token or the negative form)."""
    if not samples:
        return 0.0
    from .training.featurize import shuffle_sample_tokens

    rng = random.Random(shuffle_seed)
    samples = [shuffle_sample_tokens(s, rng) for s in samples]
    model = bundle.ground_model
    correct = 0
    for start in range(0, len(samples), batch_size):
        chunk = samples[start: start + batch_size]
        batch = encode_batch(chunk, bundle.vocab, model.config)
        outputs = generate_batch(model, bundle.vocab, batch, max_len=8)
        for sample, output in zip(chunk, outputs):
            correct += output.strip() == sample.target
    return correct / len(samples)


def eval_msr(bundle: ModelBundle, missions, qa_mode: QAMode = QAMode.NEVER,
             seed: int = 0) -> float:
    from .bench import run_benchmark

    report, _ = run_benchmark(lambda mission: ModelAgent(bundle), missions, qa_mode, seed)
    return report.msr


@dataclass
class RecipeEvaluation:
    ae_accuracy: float
    cr_accuracy: float
    cr_macro_f1: float
    vg_accuracy: float
    msr_single_goal: float
    msr_ambiguous_qa_never: float
    msr_ambiguous_qa_always: float
    msr_noaug: Optional[float]

    def to_json(self) -> dict:
        return asdict(self)


def evaluate_recipe(config: RecipeConfig, artifacts: TrainedArtifacts) -> RecipeEvaluation:
    holdout = holdout_eval_samples(config)
    bundle = artifacts.bundle()
    cr_report = eval_cr_offline(bundle.route_model, bundle.vocab, holdout["CR"].samples)
    ae_accuracy = eval_action_accuracy(bundle, holdout["AE"].samples)
    vg_accuracy = eval_vg_accuracy(bundle, holdout["VG"].samples)

    single = build_missions(
        {c: config.eval_missions_per_category for c in SINGLE_GOAL_CATEGORIES},
        seed=config.seed + 5000, qa_rate=0.0, distractor_rate=0.3,
    )
    msr_single = eval_msr(bundle, single, QAMode.NEVER, seed=config.seed)

    per_cat = max(1, config.eval_ambiguous_missions // len(SINGLE_GOAL_CATEGORIES))
    ambiguous = build_missions(
        {c: per_cat for c in SINGLE_GOAL_CATEGORIES},
        seed=config.seed + 6000, ambiguous=True,
    )
    msr_amb_never = eval_msr(bundle, ambiguous, QAMode.NEVER, seed=config.seed)
    msr_amb_always = eval_msr(bundle, ambiguous, QAMode.ALWAYS, seed=config.seed)

    msr_noaug = None
    if artifacts.noaug_model is not None:
        msr_noaug = eval_msr(artifacts.noaug_bundle(), single, QAMode.NEVER, seed=config.seed)
    return RecipeEvaluation(
        ae_accuracy=round(ae_accuracy, 4),
        cr_accuracy=round(cr_report.accuracy, 4),
        cr_macro_f1=round(cr_report.macro_f1, 2),
        vg_accuracy=round(vg_accuracy, 4),
        msr_single_goal=msr_single,
        msr_ambiguous_qa_never=msr_amb_never,
        msr_ambiguous_qa_always=msr_amb_always,
        msr_noaug=msr_noaug,
    )


def run_seed(config: RecipeConfig, metrics_dir: Optional[Path] = None) -> tuple[TrainedArtifacts, RecipeEvaluation]:
    artifacts = train_recipe(config, metrics_dir=metrics_dir)
    return artifacts, evaluate_recipe(config, artifacts)


def median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    return ordered[n // 2] if n % 2 else (ordered[n // 2 - 1] + ordered[n // 2]) / 2
