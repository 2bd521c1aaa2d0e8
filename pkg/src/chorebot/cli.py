"""Command line interface: datagen, train, bench, serve, play."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

CHECKPOINT_ENV = "CHOREBOT_CHECKPOINT"


def _load_bundle(checkpoint: str, vocab_path: str | None = None,
                 route_checkpoint: str | None = None):
    from .agent import ModelBundle
    from .grammar import Vocabulary
    from .model import load_checkpoint

    model, digest = load_checkpoint(checkpoint)
    vocab_file = Path(vocab_path) if vocab_path else Path(checkpoint).with_suffix(".vocab.txt")
    if not vocab_file.exists():
        raise click.ClickException(f"vocabulary file {vocab_file} not found")
    vocab = Vocabulary.load(vocab_file)
    if digest and vocab.digest() != digest:
        raise click.ClickException(
            f"vocabulary digest mismatch: checkpoint expects {digest}, file has {vocab.digest()}"
        )
    if route_checkpoint:
        route_model, _ = load_checkpoint(route_checkpoint)
        return ModelBundle.modular(vocab, route_model, model)
    return ModelBundle.unified(vocab, model)


def _agent_factory(agent: str, checkpoint: str | None, vocab: str | None,
                   route_checkpoint: str | None = None):
    from .agent import ModelAgent
    from .agent.oracle_policy import OraclePolicy
    from .data.planner import ExpertAgent

    if agent == "expert":
        return lambda mission: ExpertAgent(mission) if mission is not None else OraclePolicy()
    if agent == "oracle":
        return lambda mission: OraclePolicy()
    checkpoint = checkpoint or os.environ.get(CHECKPOINT_ENV)
    if not checkpoint:
        raise click.ClickException(f"model agent needs --checkpoint or ${CHECKPOINT_ENV}")
    bundle = _load_bundle(checkpoint, vocab, route_checkpoint)
    return lambda mission: ModelAgent(bundle)


@click.group()
def main():
    """Dialog-guided household agent tooling."""


@main.command()
@click.option("--out", type=click.Path(), required=True, help="output directory")
@click.option("--missions-per-category", default=10, show_default=True)
@click.option("--layouts", default=8, show_default=True, help="layouts for augmentation scenes")
@click.option("--caps", type=click.Choice(["train", "validation"]), default="train", show_default=True)
@click.option("--pretrain-per-task", default=0, show_default=True,
              help="also emit N pretraining samples per task")
@click.option("--seed", default=0, show_default=True)
def datagen(out, missions_per_category, layouts, caps, pretrain_per_task, seed):
    """Generate missions, augmentation samples, and pretraining data."""
    import random

    from .data import DEFAULT_CAPS_TRAIN, DEFAULT_CAPS_VALIDATION, build_missions, save_missions
    from .data.pipeline import build_finetune_data, worlds_for_augs
    from .data.missions import SUPPORTED_CATEGORIES
    from .training import build_pretrain_dataset, sample_scenes, save_samples

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts = {c: missions_per_category for c in SUPPORTED_CATEGORIES}
    click.echo(f"generating {sum(counts.values())} missions...")
    missions = build_missions(counts, seed=seed)
    save_missions(missions, out_dir / "missions.json")
    cap_table = DEFAULT_CAPS_TRAIN if caps == "train" else DEFAULT_CAPS_VALIDATION
    click.echo("generating augmentation and trajectory samples...")
    datasets = build_finetune_data(missions, num_aug_layouts=layouts, caps=cap_table, seed=seed)
    for task, dataset in sorted(datasets.items()):
        path = out_dir / f"{task.lower()}_samples.jsonl"
        save_samples(dataset.samples, path)
        click.echo(f"  {task}: {dataset.count} samples -> {path}")
    pretrain_counts = {}
    if pretrain_per_task > 0:
        rng = random.Random(seed + 7)
        scenes = []
        for world in worlds_for_augs(layouts, rng):
            scenes.extend(sample_scenes(world, 20, rng))
        per_task = {t: pretrain_per_task for t in
                    ("MLM", "ITM", "Caption", "DenseCaption", "VG", "VQA", "Relation")}
        pretrain = build_pretrain_dataset(scenes, per_task, rng)
        save_samples(pretrain, out_dir / "pretrain_samples.jsonl")
        pretrain_counts = {t: sum(1 for s in pretrain if s.task_id == t) for t in per_task}
        click.echo(f"  pretraining: {len(pretrain)} samples -> {out_dir / 'pretrain_samples.jsonl'}")
    report = {
        "missions": {c: counts[c] for c in counts},
        "samples": {t: d.count for t, d in datasets.items()},
        "pretraining": pretrain_counts,
        "caps": cap_table,
        "seed": seed,
    }
    (out_dir / "generation_report.json").write_text(json.dumps(report, indent=1))
    click.echo(f"wrote {out_dir}/generation_report.json")


def _read_config(path: str | None) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text()
    if path.endswith(".toml"):
        import tomllib

        return tomllib.loads(text)
    return json.loads(text)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), help="TOML or JSON recipe config")
@click.option("--out", type=click.Path(), required=True, help="checkpoint output path (.npz)")
@click.option("--seed", default=0, show_default=True)
@click.option("--metrics", type=click.Path(), default=None, help="directory for per-step CSV metrics")
@click.option("--evaluate/--no-evaluate", default=True, show_default=True)
def train(config_path, out, seed, metrics, evaluate):
    """Pretrain + fine-tune the desk-scale model and save a checkpoint."""
    from .model import save_checkpoint
    from .recipe import RecipeConfig, evaluate_recipe, train_recipe

    overrides = _read_config(config_path)
    overrides.setdefault("seed", seed)
    config = RecipeConfig(**overrides)
    click.echo(f"training with seed {config.seed}...")
    artifacts = train_recipe(config, metrics_dir=Path(metrics) if metrics else None)
    out_path = Path(out)
    save_checkpoint(artifacts.model, out_path, vocab_digest=artifacts.vocab.digest())
    artifacts.vocab.save(out_path.with_suffix(".vocab.txt"))
    click.echo(f"saved {out_path} and {out_path.with_suffix('.vocab.txt')}")
    if artifacts.noaug_model is not None:
        noaug_path = out_path.with_name(out_path.stem + "_noaug.npz")
        save_checkpoint(artifacts.noaug_model, noaug_path, vocab_digest=artifacts.vocab.digest())
        click.echo(f"saved {noaug_path}")
    if evaluate:
        evaluation = evaluate_recipe(config, artifacts)
        click.echo(json.dumps(evaluation.to_json(), indent=1))


@main.group()
def bench():
    """Benchmark harness."""


@bench.command("run")
@click.option("--missions", "missions_path", type=click.Path(exists=True), required=True)
@click.option("--checkpoint", type=click.Path(exists=True), default=None)
@click.option("--vocab", type=click.Path(exists=True), default=None)
@click.option("--qa", type=click.Choice(["never", "always", "cr"]), default="never", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="report JSON path")
@click.option("--episodes", "episodes_path", type=click.Path(), default=None, help="episode JSONL log")
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="report CSV path")
@click.option("--agent", type=click.Choice(["model", "expert", "oracle"]), default="model", show_default=True)
def bench_run(missions_path, checkpoint, vocab, qa, seed, out, episodes_path, csv_path, agent):
    """Run an agent over a mission suite and write MSR/NRA reports."""
    from .agent import QAMode
    from .bench import report_to_csv, run_benchmark, save_episodes
    from .data import load_missions

    missions = load_missions(missions_path)
    factory = _agent_factory(agent, checkpoint, vocab)
    report, episodes = run_benchmark(factory, missions, QAMode(qa), seed)
    Path(out).write_text(json.dumps(report.to_json(), indent=1))
    click.echo(f"MSR {report.msr} | NRA {report.nra} over {report.episodes} episodes -> {out}")
    if episodes_path:
        save_episodes(episodes, episodes_path)
    if csv_path:
        report_to_csv(report, csv_path)


@main.command()
@click.option("--checkpoint", type=click.Path(exists=True), default=None)
@click.option("--vocab", type=click.Path(exists=True), default=None)
@click.option("--missions", "missions_path", type=click.Path(exists=True), default=None)
@click.option("--agent", type=click.Choice(["model", "expert", "oracle"]), default="model", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
def serve(checkpoint, vocab, missions_path, agent, host, port):
    """Start the interactive session service."""
    import uvicorn

    from .data import load_missions
    from .service import make_app

    missions = {}
    if missions_path:
        missions = {m.mission_id: m for m in load_missions(missions_path)}
    factory = _agent_factory(agent, checkpoint, vocab)
    app = make_app(factory, missions=missions)
    click.echo(f"serving on {host}:{port} with agent={agent}, {len(missions)} missions")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--mission", "mission_ref", default=None,
              help="missions file path, optionally ':<missionId>'")
@click.option("--layout-seed", default=0, show_default=True, help="random layout when no mission given")
@click.option("--checkpoint", type=click.Path(exists=True), default=None)
@click.option("--vocab", type=click.Path(exists=True), default=None)
@click.option("--agent", type=click.Choice(["model", "expert", "oracle"]), default="oracle", show_default=True)
@click.option("--interactive/--scripted", default=True, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--export", "export_path", type=click.Path(), default=None, help="trajectory JSONL output")
def play(mission_ref, layout_seed, checkpoint, vocab, agent, interactive, seed, export_path):
    """Drive a session from the terminal as the commander."""
    from .data import load_missions
    from .service import SessionManager
    from .world.generate import generate_layout

    factory = _agent_factory(agent, checkpoint, vocab)
    manager = SessionManager(factory)
    mission = None
    if mission_ref:
        path, _, mission_id = mission_ref.partition(":")
        missions = load_missions(path)
        mission = next((m for m in missions if m.mission_id == mission_id), missions[0])
        managed, messages = manager.create_session(
            mission=mission, qa_mode="interactive" if interactive else "never", seed=seed)
    else:
        managed, messages = manager.create_session(
            layout=generate_layout(layout_seed),
            qa_mode="interactive" if interactive else "never", seed=seed)
    _print_messages(messages)
    if mission is not None:
        click.echo("mission instructions:")
        for i, spec in enumerate(mission.instructions):
            click.echo(f"  {i + 1}. {spec.text}")

    queue = [spec.text for spec in mission.instructions] if (mission and not interactive) else None
    while True:
        if queue is not None:
            if not queue:
                break
            text = queue.pop(0)
            click.echo(f"> {text}")
        else:
            try:
                text = click.prompt("instruction (or 'quit')", type=str)
            except (EOFError, KeyboardInterrupt):
                break
            if text.strip() in ("quit", "exit"):
                break
        messages = manager.post_instruction(managed.session_id, text)
        _print_messages(messages)
        while managed.pending is not None:
            answer = click.prompt("  answer", type=str) if queue is None else ""
            _print_messages(manager.post_clarification_answer(managed.session_id, answer))
    if export_path:
        Path(export_path).write_text(manager.export(managed.session_id))
        click.echo(f"trajectory exported to {export_path}")


def _print_messages(messages) -> None:
    for message in messages:
        kind, payload = message.kind, message.payload
        if kind == "sessionCreated":
            click.echo(f"[{message.seq}] session ready (qa={payload.get('qaMode')})")
        elif kind == "observation":
            detections = payload.get("detections", [])
            summary = ", ".join(f"{d['color']} {d['class']}#{d['token']}" for d in detections[:6])
            more = f" (+{len(detections) - 6} more)" if len(detections) > 6 else ""
            click.echo(f"[{message.seq}] see: {summary or 'nothing'}{more}")
        elif kind == "crDecision":
            click.echo(f"[{message.seq}] routing: {payload['cr']}")
        elif kind == "actionExecuted":
            ok = "ok" if payload["outcome"]["success"] else f"FAILED {payload['outcome']}"
            click.echo(f"[{message.seq}] action {payload['command']} -> {ok}")
        elif kind == "clarificationRequest":
            click.echo(f"[{message.seq}] agent asks: {payload['question']}")
            for c in payload["candidates"]:
                click.echo(f"      candidate token {c['token']}: {c['color']} {c['class']}")
        elif kind == "missionStatus":
            click.echo(
                f"[{message.seq}] status: {payload['status']}"
                f" | goal reached: {payload['goalReached']} | actions: {payload['robotActions']}"
            )
        elif kind == "error":
            click.echo(f"[{message.seq}] error: {payload.get('code')}: {payload.get('message')}")


if __name__ == "__main__":
    main()
