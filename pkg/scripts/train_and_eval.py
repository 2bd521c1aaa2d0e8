#!/usr/bin/env python3
"""End-to-end desk-scale run: data, pretrain, fine-tune, evaluation battery.

Usage: python scripts/train_and_eval.py [--seed 0] [--out runs/seed0]
"""

import argparse
import json
import time
from pathlib import Path

from chorebot.model import save_checkpoint
from chorebot.recipe import RecipeConfig, evaluate_recipe, train_recipe


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("runs/seed0"))
    parser.add_argument("--finetune-steps", type=int, default=None)
    args = parser.parse_args()

    overrides = {"seed": args.seed}
    if args.finetune_steps:
        overrides["finetune_steps"] = args.finetune_steps
    config = RecipeConfig(**overrides)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "config.json").write_text(json.dumps(config.to_json(), indent=1))

    t0 = time.time()
    artifacts = train_recipe(config, metrics_dir=args.out / "metrics")
    print(f"training done in {time.time() - t0:.0f}s "
          f"(pretrain loss {artifacts.pretrain_report.final_loss:.3f}, "
          f"finetune loss {artifacts.finetune_report.final_loss:.3f})")

    save_checkpoint(artifacts.model, args.out / "model.npz", vocab_digest=artifacts.vocab.digest())
    artifacts.vocab.save(args.out / "model.vocab.txt")
    if artifacts.noaug_model is not None:
        save_checkpoint(artifacts.noaug_model, args.out / "model_noaug.npz",
                        vocab_digest=artifacts.vocab.digest())

    evaluation = evaluate_recipe(config, artifacts)
    (args.out / "evaluation.json").write_text(json.dumps(evaluation.to_json(), indent=1))
    print(json.dumps(evaluation.to_json(), indent=1))


if __name__ == "__main__":
    main()
