"""End-to-end dataset assembly for fine-tuning.

Fine-tune data = visual augmentation samples (routing, single actions,
grounding; half the routing/grounding positives converted to negatives) plus
multi-step action samples extracted from expert mission trajectories.
"""

from __future__ import annotations

import random

from ..agent.formats import ae_sample, cr_sample
from ..grammar import parse_cr
from ..grammar.actions import serialize_actions
from ..training.datasets import TaskDataset, TaskSample, group_by_task
from ..world import WorldState, load_layout
from ..world.generate import generate_layout
from .missions import CDFMission
from .planner import expert_solve, generate_missions
from .visual_augs import (
    DEFAULT_CAPS_TRAIN,
    aug_to_task_samples,
    gen_visual_augs,
    negativize_all,
)


def trajectory_samples(missions: list[CDFMission], seed: int = 0) -> list[TaskSample]:
    """Per-step action samples plus instruction-start routing samples from
    expert trajectories. Only solvable missions contribute (the expert
    rejects the rest at generation time)."""
    out: list[TaskSample] = []
    for mission in missions:
        solved, agent, _ = expert_solve(mission, seed=seed)
        if not solved:
            continue
        for record in agent.recorded:
            if not record.steps:
                continue
            meta = {"missionId": mission.mission_id, "targetObjectId": record.target_object_id}
            start_frame = record.steps[0].frames[-1]
            out.append(cr_sample(start_frame, record.instruction, record.qa,
                                 parse_cr(record.cr), meta=meta))
            for step in record.steps:
                target = serialize_actions([step.phrase], complete=step.is_last)
                out.append(ae_sample(step.frames, record.instruction, record.qa,
                                     target, meta=meta))
    return out


def worlds_for_augs(num_layouts: int, rng: random.Random | int,
                    duplicates: int = 3) -> list[WorldState]:
    """Randomized layouts for augmentation scenes, with a few same-class
    different-color duplicates injected so one-vs-multiple-match routing has
    real positives to learn from."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    worlds = []
    for _ in range(num_layouts):
        layout = generate_layout(rng)
        movable = [o for o in layout["objects"] if o["class"] not in ("desk", "table", "counter")]
        for source in rng.sample(movable, k=min(duplicates, len(movable))):
            from ..world.catalog import COLORS
            from .missions import _inject_object

            other_colors = [c for c in COLORS if c != source["color"]]
            _inject_object(layout, rng, source["class"], color=rng.choice(other_colors),
                           room=source["room"])
        worlds.append(load_layout(layout))
    return worlds


def build_finetune_data(
    missions: list[CDFMission],
    num_aug_layouts: int = 12,
    caps: dict[str, int] | None = None,
    negative_rate: float = 0.5,
    seed: int = 0,
    include_augmentations: bool = True,
) -> dict[str, TaskDataset]:
    """The full downstream dataset keyed by task id (CR, AE, VG).

    With include_augmentations=False only expert-trajectory data remains,
    which is the no-augmentation ablation condition.
    """
    rng = random.Random(seed)
    samples: list[TaskSample] = list(trajectory_samples(missions, seed=seed))
    if include_augmentations:
        worlds = worlds_for_augs(num_aug_layouts, rng)
        augs, _ = gen_visual_augs(worlds, caps or DEFAULT_CAPS_TRAIN, rng)
        aug_samples: list[TaskSample] = []
        for aug in augs:
            aug_samples.extend(aug_to_task_samples(aug, rng))
        aug_samples = negativize_all(aug_samples, negative_rate, rng)
        samples.extend(aug_samples)
    return group_by_task(samples)


def build_missions(counts: dict[str, int], seed: int = 0, qa_rate: float = 0.6,
                   distractor_rate: float = 0.5, ambiguous: bool = False) -> list[CDFMission]:
    return generate_missions(counts, random.Random(seed), qa_rate=qa_rate,
                             distractor_rate=distractor_rate, ambiguous=ambiguous)
