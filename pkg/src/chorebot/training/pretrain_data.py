"""Synthetic single-frame pretraining tasks generated from scene graphs.

Seven tasks in a shared text-to-text format: masked language modeling,
image-text matching, captioning, dense captioning, visual grounding, visual
question answering, and relation prediction. Captions and answers are
template-rendered from ground-truth scene attributes.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from ..grammar import MASK, build_prompt, visual_token
from ..world import WorldState, render_observation
from ..world.types import Observation
from .datasets import STATE_BIT_FIELDS, FrameData, RegionData, TaskSample

MLM_MASK_PROBABILITY = 0.3


@dataclass(frozen=True)
class Scene:
    """A rendered frame plus the relations that captions can mention."""

    frame: FrameData
    containment: dict[str, str] = field(default_factory=dict)  # object_id -> container object_id


def snapshot_frame(world: WorldState, obs: Observation, token_map: dict[int, int],
                   frame_id: int = 1) -> FrameData:
    regions = []
    for i, det in enumerate(obs.detections):
        obj = world.objects[det.object_id]
        bits = tuple(int(obj.state.get_flag(f)) for f in STATE_BIT_FIELDS)
        regions.append(RegionData(
            class_name=det.class_label, color=obj.color, state_bits=bits,
            bbox=det.bbox, token=token_map[i], object_id=det.object_id,
        ))
    return FrameData(frame_id=frame_id, room=obs.room, regions=tuple(regions))


def scene_from_world(world: WorldState, obs: Observation, token_map: dict[int, int]) -> Scene:
    frame = snapshot_frame(world, obs, token_map)
    visible = {r.object_id for r in frame.regions}
    containment = {
        oid: world.objects[oid].state.contained_in
        for oid in visible
        if world.objects[oid].state.contained_in in visible
    }
    return Scene(frame=frame, containment=containment)


def sample_scenes(world: WorldState, count: int, rng: random.Random) -> list[Scene]:
    """Random agent placements rendered into scenes with >= 1 detection."""
    from ..world.sim import clone_world

    scenes: list[Scene] = []
    attempts = 0
    while len(scenes) < count and attempts < count * 20:
        attempts += 1
        w = clone_world(world)
        room = w.rooms[rng.randrange(len(w.rooms))]
        x1, y1, x2, y2 = room.bounds
        w.agent.room = room.name
        w.agent.position = (rng.uniform(x1 + 0.3, x2 - 0.3), rng.uniform(y1 + 0.3, y2 - 0.3))
        w.agent.heading = rng.choice([0, 90, 180, 270])
        obs = render_observation(w, frame_index=1)
        if not obs.detections:
            continue
        token_map = {i: i + 1 for i in range(len(obs.detections))}
        scenes.append(scene_from_world(w, obs, token_map))
    return scenes


# -- caption rendering ---------------------------------------------------------


def caption_for(scene: Scene, region: RegionData, rng: random.Random) -> str:
    container = _container_of(scene, region)
    if container is not None:
        template = rng.choice((
            "a {color} {cls} inside the {c2} {cls2}",
            "the {color} {cls} in the {c2} {cls2}",
        ))
        return template.format(color=region.color, cls=region.class_name,
                               c2=container.color, cls2=container.class_name)
    template = rng.choice((
        "a {color} {cls} in the {room}",
        "the {color} {cls} in the {room}",
        "there is a {color} {cls} in the {room}",
    ))
    return template.format(color=region.color, cls=region.class_name, room=scene.frame.room)


def _container_of(scene: Scene, region: RegionData) -> Optional[RegionData]:
    container_id = scene.containment.get(region.object_id)
    if container_id is None:
        return None
    for other in scene.frame.regions:
        if other.object_id == container_id:
            return other
    return None


def _pick_region(scene: Scene, rng: random.Random) -> RegionData:
    return scene.frame.regions[rng.randrange(len(scene.frame.regions))]


def _class_counts(scene: Scene) -> Counter:
    return Counter(r.class_name for r in scene.frame.regions)


# -- the seven tasks -------------------------------------------------------------


def make_pretrain_sample(
    scene: Scene,
    task_id: str,
    rng: random.Random,
    negative_pool: Optional[list[str]] = None,
    mask_probability: float = MLM_MASK_PROBABILITY,
) -> TaskSample:
    if not scene.frame.regions:
        raise ValueError("scene has no visible objects")
    frames = (scene.frame,)
    if task_id == "MLM":
        caption = caption_for(scene, _pick_region(scene, rng), rng)
        masked = " ".join(MASK if rng.random() < mask_probability else w for w in caption.split())
        return TaskSample("MLM", build_prompt("MLM", {"caption": masked}, rng), frames, caption)
    if task_id == "ITM":
        caption = caption_for(scene, _pick_region(scene, rng), rng)
        matched = not negative_pool or rng.random() < 0.5
        if not matched:
            caption = negative_pool[rng.randrange(len(negative_pool))]
        return TaskSample("ITM", build_prompt("ITM", {"statement": caption}, rng), frames,
                          "True" if matched else "False")
    if task_id == "Caption":
        caption = caption_for(scene, _pick_region(scene, rng), rng)
        return TaskSample("Caption", build_prompt("Caption", {}, rng), frames, caption)
    if task_id == "DenseCaption":
        region = _pick_region(scene, rng)
        prompt = build_prompt("DenseCaption", {"region": visual_token(region.token)}, rng)
        return TaskSample("DenseCaption", prompt, frames, f"{region.color} {region.class_name}")
    if task_id == "VG":
        region, phrase = _groundable_region(scene, rng)
        prompt = build_prompt("VG", {"caption": phrase}, rng)
        return TaskSample("VG", prompt, frames, visual_token(region.token))
    if task_id == "VQA":
        return _make_vqa(scene, rng)
    if task_id == "Relation":
        return _make_relation(scene, rng)
    raise ValueError(f"not a pretraining task: {task_id!r}")


def _groundable_region(scene: Scene, rng: random.Random) -> tuple[RegionData, str]:
    """A region plus a referring phrase that matches it uniquely."""
    counts = _class_counts(scene)
    pair_counts = Counter((r.class_name, r.color) for r in scene.frame.regions)
    unique = [r for r in scene.frame.regions if pair_counts[(r.class_name, r.color)] == 1]
    pool = unique or list(scene.frame.regions)
    region = pool[rng.randrange(len(pool))]
    if counts[region.class_name] == 1 and rng.random() < 0.5:
        return region, f"the {region.class_name}"
    return region, f"the {region.color} {region.class_name}"


def _make_vqa(scene: Scene, rng: random.Random) -> TaskSample:
    counts = _class_counts(scene)
    forms = ["room", "count"]
    unique_classes = [c for c, n in counts.items() if n == 1]
    if unique_classes:
        forms.append("color")
    openable = [r for r in scene.frame.regions if counts[r.class_name] == 1 and r.state_bits[0] >= 0
                and _is_openable(r.class_name)]
    if openable:
        forms.append("open")
    form = rng.choice(forms)
    if form == "color":
        cls = rng.choice(unique_classes)
        region = next(r for r in scene.frame.regions if r.class_name == cls)
        question, answer = f"what color is the {cls}?", region.color
    elif form == "open":
        region = openable[rng.randrange(len(openable))]
        question = f"is the {region.class_name} open?"
        answer = "yes" if region.state_bits[0] else "no"
    elif form == "count":
        cls = rng.choice(sorted(counts))
        question, answer = f"how many {cls} are there?", str(counts[cls])
    else:
        question, answer = "which room is this?", scene.frame.room
    return TaskSample("VQA", build_prompt("VQA", {"question": question}, rng), (scene.frame,), answer)


def _is_openable(class_name: str) -> bool:
    from ..world.catalog import Affordance, affordances_of

    return Affordance.OPENABLE in affordances_of(class_name)


def _make_relation(scene: Scene, rng: random.Random) -> TaskSample:
    regions = scene.frame.regions
    if len(regions) < 2:
        raise ValueError("relation prediction needs at least two objects")
    pair = None
    for r in regions:
        container = _container_of(scene, r)
        if container is not None:
            pair = (r, container, "inside of")
            break
    if pair is None:
        ordered = sorted(regions, key=lambda r: (r.bbox[0] + r.bbox[2]) / 2)
        i = rng.randrange(len(ordered) - 1)
        pair = (ordered[i], ordered[i + 1], "next to")
    subject, obj, predicate = pair
    prompt = build_prompt(
        "Relation", {"subject": visual_token(subject.token), "object": visual_token(obj.token)}, rng
    )
    target = f"{subject.color} {subject.class_name} {predicate} {obj.color} {obj.class_name}"
    return TaskSample("Relation", prompt, (scene.frame,), target)


def build_pretrain_dataset(
    scenes: list[Scene],
    samples_per_task: dict[str, int],
    rng: random.Random,
) -> list[TaskSample]:
    """Round-robin over scenes to fill each task's quota."""
    caption_pool = [caption_for(s, _pick_region(s, rng), rng) for s in scenes]
    out: list[TaskSample] = []
    for task_id, quota in sorted(samples_per_task.items()):
        made = 0
        i = 0
        while made < quota and i < quota * 10:
            scene = scenes[(made + i) % len(scenes)]
            i += 1
            try:
                out.append(make_pretrain_sample(scene, task_id, rng, negative_pool=caption_pool))
            except ValueError:
                continue
            made += 1
    return out
