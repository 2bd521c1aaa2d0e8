"""Single-frame (observation, instruction, action) augmentation samples.

Scenes are staged so the action's preconditions genuinely hold (replaying the
action succeeds), the agent stands within interaction range (except Search,
which only needs visibility), and per-action sample caps bound the output.
Negative conversion swaps in a frame lacking the referent and rewrites the
target to its no-match form.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from ..agent.formats import ae_sample, cr_sample, vg_sample
from ..agent.referents import match_count, split_referent
from ..grammar import CRPrediction, Match, Route, visual_token
from ..grammar.actions import ActionPhrase, serialize_actions
from ..training.datasets import FrameData, TaskSample
from ..world import WorldState, render_observation
from ..world.catalog import Affordance
from ..world.sim import INTERACTION_RADIUS, WATER_SOURCES, _is_hidden, clone_world
from ..world.types import ObjectInstance
from .clarifications import QType, gen_clarification
from .oracle import match_for_count, oracle_cr
from .templates import paraphrase

# per-action sample caps (train, validation)
DEFAULT_CAPS_TRAIN: dict[str, int] = {
    "break": 750, "clean": 400, "close": 750, "fill": 750, "goto": 750, "open": 750,
    "pickup": 750, "place": 750, "pour": 750, "scan": 400, "search": 750, "toggle": 750,
}
DEFAULT_CAPS_VALIDATION: dict[str, int] = {
    "break": 400, "clean": 200, "close": 400, "fill": 400, "goto": 400, "open": 400,
    "pickup": 400, "place": 400, "pour": 400, "scan": 200, "search": 500, "toggle": 400,
}

CATEGORY_AFFORDANCE: dict[str, Affordance] = {
    "break": Affordance.BREAKABLE,
    "clean": Affordance.DIRTYABLE,
    "close": Affordance.OPENABLE,
    "fill": Affordance.FILLABLE,
    "open": Affordance.OPENABLE,
    "pickup": Affordance.PICKUPABLE,
    "toggle": Affordance.TOGGLEABLE,
}


@dataclass
class VisualAugSample:
    category: str
    frame: FrameData
    instruction: str
    qa: Optional[tuple[str, str]]
    cr_label: CRPrediction
    action_target: Optional[str]  # serialized action sequence; None for search
    vg_query: Optional[str]
    vg_target: Optional[str]
    object_id: str
    world: Optional[WorldState] = None  # the staged scene, for replay checks


@dataclass
class AugReport:
    counts: dict[str, int]
    caps: dict[str, int]

    def underfilled(self) -> list[str]:
        return [k for k, cap in self.caps.items() if self.counts.get(k, 0) < cap]


def gen_visual_augs(
    worlds: list[WorldState],
    caps: Optional[dict[str, int]] = None,
    rng: random.Random | int = 0,
    qa_rate: float = 0.5,
) -> tuple[list[VisualAugSample], AugReport]:
    if isinstance(rng, int):
        rng = random.Random(rng)
    if caps is None:
        caps = DEFAULT_CAPS_TRAIN
    samples: list[VisualAugSample] = []
    counts: dict[str, int] = {}
    for category in sorted(caps):
        cap = caps[category]
        made = 0
        attempts = 0
        while made < cap and attempts < cap * 25:
            attempts += 1
            world = clone_world(worlds[rng.randrange(len(worlds))])
            sample = _try_make(world, category, rng, qa_rate)
            if sample is not None:
                samples.append(sample)
                made += 1
        counts[category] = made
    return samples, AugReport(counts=counts, caps=dict(caps))


def _try_make(world: WorldState, category: str, rng: random.Random,
              qa_rate: float) -> Optional[VisualAugSample]:
    stage = _stage_scene(world, category, rng)
    if stage is None:
        return None
    target, held, is_search, proximity = stage
    # a third of manipulation scenes start out of reach: the gold first
    # action is then the approach, exactly as in expert trajectories
    far = proximity and category != "goto" and rng.random() < 0.35
    if not _position_agent(world, target, rng, proximity and not far):
        return None
    obs = render_observation(world, frame_index=1)
    token_map = {i: i + 1 for i in range(len(obs.detections))}
    from ..training.pretrain_data import snapshot_frame

    frame = snapshot_frame(world, obs, token_map, frame_id=1)
    region = next((r for r in frame.regions if r.object_id == target.id), None)
    if region is None:
        return None

    same_class = sum(1 for r in frame.regions if r.class_name == target.class_name)
    # ambiguous scenes: color half the time (one match) else bare (multiple)
    use_color = rng.random() < (0.5 if same_class > 1 else 0.35)
    mention = f"{target.color} {target.class_name}" if use_color else target.class_name

    slots = {"object": mention, "room": world.agent.room}
    if category == "goto" and rng.random() < 0.25:
        room = world.agent.room
        instruction = paraphrase("goto_room", {"room": room}, rng)
        cr = CRPrediction(Route.ACT, Match.ONE_MATCH, None)
        action = serialize_actions([ActionPhrase("goto", object_name=room)])
        return VisualAugSample(category, frame, instruction, None, cr, action, None, None,
                               target.id, world)
    if category == "place":
        held_mention = held.class_name if held is not None else "object"
        slots = {"receptacle": mention, "object": held_mention}
    elif category == "pour":
        held_mention = held.class_name if held is not None else "object"
        slots = {"target": mention, "object": held_mention}
    template_key = "goto_object" if category == "goto" else category
    instruction = paraphrase(template_key, slots, rng)

    qa = None
    if rng.random() < qa_rate:
        pool = [QType.DESCRIPTION, QType.LOCATION, QType.DIRECTION, QType.OTHER]
        if same_class > 1:
            pool.extend([QType.REFERENCE, QType.REFERENCE])
        try:
            qa = gen_clarification(world, target, rng.choice(pool), rng).as_pair()
        except Exception:
            qa = None

    cr = oracle_cr(frame, mention, is_search=is_search)
    if is_search:
        return VisualAugSample(category, frame, instruction, qa, cr, None,
                               mention, visual_token(region.token), target.id, world)
    import math

    beyond_reach = (
        target.state.position is not None
        and math.dist(world.agent.position, target.state.position) >= INTERACTION_RADIUS
    )
    if far and beyond_reach:
        # gold action: approach first; the sequence stays open (no stop)
        phrase = ActionPhrase("goto", object_name=mention, frame=1, visual=region.token)
        action = serialize_actions([phrase], complete=False)
    else:
        verb = "goto" if category == "goto" else category
        phrase = ActionPhrase(verb, object_name=mention, frame=1, visual=region.token)
        action = serialize_actions([phrase])
    return VisualAugSample(category, frame, instruction, qa, cr, action, None, None,
                           target.id, world)


def _stage_scene(world: WorldState, category: str, rng: random.Random):
    """Pick a target and mutate the world so the action's preconditions hold.

    Returns (target, held_object, is_search, proximity_required) or None.
    """
    objects = [o for o in world.objects.values() if o.state.position is not None
               and not _is_hidden(world, o)]
    rng.shuffle(objects)

    def pick(predicate) -> Optional[ObjectInstance]:
        for obj in objects:
            if predicate(obj):
                return obj
        return None

    if category in ("search", "scan", "goto"):
        target = pick(lambda o: True)
        return None if target is None else (target, None, category == "search", category != "search")
    if category in CATEGORY_AFFORDANCE and category not in ("clean", "fill"):
        aff = CATEGORY_AFFORDANCE[category]
        target = pick(lambda o: o.has(aff) and not o.state.is_broken)
        if target is None:
            return None
        if category == "open":
            target.state.is_open = False
        elif category == "close":
            target.state.is_open = True
        elif category == "pickup" and _is_hidden(world, target):
            return None
        return (target, None, False, True)
    if category in ("clean", "fill"):
        aff = CATEGORY_AFFORDANCE[category]
        target = pick(lambda o: o.has(aff) and o.has(Affordance.PICKUPABLE))
        if target is None:
            return None
        sink = pick(lambda o: o.class_name in WATER_SOURCES
                    and world.room_of_object(o.id) == world.room_of_object(target.id))
        if sink is None:
            sink = pick(lambda o: o.class_name in WATER_SOURCES)
        if sink is None:
            return None
        _move_into(world, target, sink)
        sink.state.is_on = True
        if category == "clean":
            target.state.is_dirty = True
        else:
            target.state.is_filled = False
        return (target, None, False, True)
    if category == "place":
        target = pick(lambda o: o.has(Affordance.RECEPTACLE))
        if target is None:
            return None
        if target.has(Affordance.OPENABLE):
            target.state.is_open = True
        held = pick(lambda o: o.has(Affordance.PICKUPABLE) and o.id != target.id)
        if held is None:
            return None
        _hold(world, held)
        return (target, held, False, True)
    if category == "pour":
        target = pick(lambda o: o.has(Affordance.RECEPTACLE) or o.has(Affordance.FILLABLE))
        if target is None:
            return None
        held = pick(lambda o: o.has(Affordance.PICKUPABLE) and o.has(Affordance.FILLABLE)
                    and o.id != target.id)
        if held is None:
            return None
        _hold(world, held)
        held.state.is_filled = True
        if target.has(Affordance.FILLABLE):
            target.state.is_filled = False
        return (target, held, False, True)
    return None


def _move_into(world: WorldState, obj: ObjectInstance, container: ObjectInstance) -> None:
    source_room = world.room_of_object(obj.id)
    target_room = world.room_of_object(container.id)
    if source_room is not None and target_room is not None and source_room is not target_room:
        source_room.object_ids.discard(obj.id)
        target_room.object_ids.add(obj.id)
    obj.state.contained_in = container.id
    obj.state.position = container.state.position


def _hold(world: WorldState, obj: ObjectInstance) -> None:
    room = world.room_of_object(obj.id)
    if room is not None:
        room.object_ids.discard(obj.id)
    obj.state.position = None
    obj.state.contained_in = None
    world.inventory = obj.id


def _position_agent(world: WorldState, target: ObjectInstance, rng: random.Random,
                    proximity: bool) -> bool:
    room = world.room_of_object(target.id)
    if room is None or target.state.position is None:
        return False
    x1, y1, x2, y2 = room.bounds
    tx, ty = target.state.position
    for _ in range(12):
        if proximity:
            distance = rng.uniform(0.55, INTERACTION_RADIUS * 0.92)
        else:
            distance = rng.uniform(0.55, 6.0)
        angle = rng.uniform(0, 2 * math.pi)
        pos = (tx + distance * math.cos(angle), ty + distance * math.sin(angle))
        if not (x1 <= pos[0] <= x2 and y1 <= pos[1] <= y2):
            continue
        world.agent.room = room.name
        world.agent.position = pos
        from ..world.sim import _facing_heading

        world.agent.heading = _facing_heading(pos, (tx, ty))
        if proximity and math.dist(pos, (tx, ty)) >= INTERACTION_RADIUS:
            continue
        return True
    return False


# -- conversion to task samples and negative instances ---------------------------


def aug_to_task_samples(aug: VisualAugSample, rng: random.Random | int = 0) -> list[TaskSample]:
    meta = {"category": aug.category, "objectId": aug.object_id}
    out = [cr_sample(aug.frame, aug.instruction, aug.qa, aug.cr_label, rng, meta=meta)]
    if aug.action_target is not None:
        out.append(ae_sample([aug.frame], aug.instruction, aug.qa, aug.action_target, rng, meta=meta))
    if aug.vg_query is not None and aug.vg_target is not None:
        out.append(vg_sample(aug.frame, aug.vg_query, aug.vg_target, rng, meta=meta))
    return out


def negativize(
    sample: TaskSample,
    probability: float,
    rng: random.Random,
    frame_pool: list[FrameData],
) -> TaskSample:
    """With the given probability, convert a positive CR/VG sample into a
    negative: swap in a frame where the referent's class is absent and rewrite
    the target to the no-match form. Unconvertible samples pass through."""
    if sample.task_id not in ("CR", "VG"):
        raise ValueError("negative conversion applies to CR and VG samples")
    if rng.random() >= probability:
        return sample
    name = _referent_of(sample)
    if name is None:
        return sample
    _, cls = split_referent(name)
    candidates = [f for f in frame_pool if all(r.class_name != cls for r in f.regions)]
    if not candidates:
        return sample
    frame = candidates[rng.randrange(len(candidates))]
    if sample.task_id == "VG":
        target = f"no {name}"
    else:
        route = Route.SEARCH if sample.target.startswith("<search>") else Route.ACT
        target = CRPrediction(route, Match.NO_MATCH, name).render()
    return TaskSample(sample.task_id, sample.text, (frame,), target,
                      meta={**(sample.meta or {}), "negative": True})


def _referent_of(sample: TaskSample) -> Optional[str]:
    if sample.task_id == "CR":
        tail = sample.target.split(">")[-1].strip()
        return tail or None
    # VG query: "... the {referent}" after the prompt colon
    text = sample.text.split(":", 1)[-1].strip()
    return text[4:] if text.startswith("the ") else text


def negativize_all(
    samples: list[TaskSample],
    probability: float,
    rng: random.Random | int,
) -> list[TaskSample]:
    if isinstance(rng, int):
        rng = random.Random(rng)
    pool = [s.frames[0] for s in samples if s.frames]
    return [
        negativize(s, probability, rng, pool) if s.task_id in ("CR", "VG") else s
        for s in samples
    ]
