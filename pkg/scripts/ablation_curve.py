#!/usr/bin/env python3
"""MSR against action-execution data fractions, grounding held constant.

Produces a CSV curve plus a no-augmentation baseline row per seed.

Usage: python scripts/ablation_curve.py --fractions 0.25 0.5 1.0 --seeds 0 1 --out curve.csv
"""

import argparse
from pathlib import Path

from chorebot.agent import ModelAgent, ModelBundle, QAMode
from chorebot.bench import ablation_run, run_benchmark, write_curve
from chorebot.data import build_missions
from chorebot.model import ModelConfig, Seq2SeqModel
from chorebot.recipe import SINGLE_GOAL_CATEGORIES, RecipeConfig, build_training_world
from chorebot.training import TrainConfig, finetune, train


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--fractions", nargs="+", type=float, default=[0.25, 0.5, 1.0])
    parser.add_argument("--seeds", nargs="+", type=int, default=[0])
    parser.add_argument("--out", type=Path, default=Path("ablation_curve.csv"))
    parser.add_argument("--finetune-steps", type=int, default=1200)
    args = parser.parse_args()

    recipe = RecipeConfig(seed=args.seeds[0], finetune_steps=args.finetune_steps)
    vocab, pretrain_sets, finetune_sets, noaug_sets = build_training_world(recipe)
    model_config = ModelConfig(
        vocab_size=vocab.size, enc_layers=recipe.enc_layers, dec_layers=recipe.dec_layers,
        heads=recipe.heads, d_model=recipe.d_model, d_ff=recipe.d_ff, dropout=recipe.dropout,
    )
    eval_missions = build_missions(
        {c: 8 for c in SINGLE_GOAL_CATEGORIES}, seed=recipe.seed + 5000,
        qa_rate=0.0, distractor_rate=0.3,
    )

    base = Seq2SeqModel(model_config, seed=recipe.seed)
    train(base, pretrain_sets, TrainConfig(
        steps=recipe.pretrain_steps, batch_size=recipe.pretrain_batch, lr=recipe.pretrain_lr,
        warmup_steps=25, label_smoothing=0.0, seed=recipe.seed), vocab)
    pretrained = {k: p.data.copy() for k, p in base.params.items()}

    def train_fn(datasets, seed):
        model = Seq2SeqModel(model_config, seed=seed)
        for name, param in model.params.items():
            param.data = pretrained[name].copy()
        finetune(model, datasets, TrainConfig(
            steps=args.finetune_steps, batch_size=recipe.finetune_batch, lr=recipe.finetune_lr,
            warmup_steps=50, label_smoothing=recipe.label_smoothing, seed=seed), vocab)
        bundle = ModelBundle.unified(vocab, model)
        return lambda mission: ModelAgent(bundle)

    def eval_fn(agent_factory):
        report, _ = run_benchmark(agent_factory, eval_missions, QAMode.NEVER)
        return report.msr

    rows = ablation_run(finetune_sets, train_fn, eval_fn, args.fractions,
                        keep_grounding=True, seeds=args.seeds,
                        baseline_datasets=noaug_sets)
    write_curve(rows, args.out)
    for row in rows:
        print(row)
    print(f"curve written to {args.out}")


if __name__ == "__main__":
    main()
