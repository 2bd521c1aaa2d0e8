"""Clarification question/answer generation from ground-truth scene state."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum

from ..world.types import ObjectInstance, WorldState


class QType(str, Enum):
    DESCRIPTION = "description"
    DIRECTION = "direction"
    LOCATION = "location"
    REFERENCE = "reference"
    OTHER = "other"


@dataclass(frozen=True)
class ClarificationQA:
    q_type: QType
    question: str
    answer: str

    def to_json(self) -> dict:
        return {"type": self.q_type.value, "question": self.question, "answer": self.answer}

    def as_pair(self) -> tuple[str, str]:
        return (self.question, self.answer)

    @staticmethod
    def from_json(doc: dict) -> "ClarificationQA":
        return ClarificationQA(QType(doc["type"]), doc["question"], doc["answer"])


class ClarificationError(ValueError):
    pass


def gen_clarification(
    world: WorldState,
    target: ObjectInstance,
    q_type: QType,
    rng: random.Random | int = 0,
) -> ClarificationQA:
    """Answers are always consistent with the scene: attributes, rooms, and
    directions come straight from the world state."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    cls = target.class_name
    if q_type is QType.DESCRIPTION:
        question = rng.choice((f"what does the {cls} look like?", f"what color is the {cls}?"))
        return ClarificationQA(q_type, question, f"it is {target.color}")
    if q_type is QType.LOCATION:
        room = world.room_of_object(target.id)
        if room is None:
            raise ClarificationError(f"{target.id} has no room (held?)")
        landmark = _nearest_landmark(world, target)
        if landmark is not None and rng.random() < 0.5:
            return ClarificationQA(q_type, f"where is the {cls}?", f"near the {landmark.class_name}")
        return ClarificationQA(q_type, f"where is the {cls}?", f"in the {room.name}")
    if q_type is QType.REFERENCE:
        same_class = [
            o for o in world.objects.values() if o.class_name == cls and o.id != target.id
        ]
        if not same_class:
            raise ClarificationError(f"reference clarification needs multiple {cls} instances")
        question = rng.choice((f"which {cls} do you mean?", f"which {cls}?"))
        return ClarificationQA(q_type, question, f"the {target.color} one")
    if q_type is QType.DIRECTION:
        if target.state.position is None:
            raise ClarificationError(f"{target.id} is held; no direction to it")
        return ClarificationQA(
            q_type, "which way should i go?",
            _relative_direction(world, target.state.position),
        )
    question = rng.choice(("what should i deliver?", "anything else i should know?"))
    return ClarificationQA(QType.OTHER, question, f"the {target.color} {cls}")


def _nearest_landmark(world: WorldState, target: ObjectInstance) -> ObjectInstance | None:
    if target.state.position is None:
        return None
    room = world.room_of_object(target.id)
    if room is None:
        return None
    best = None
    best_dist = 2.5
    for oid in sorted(room.object_ids):
        other = world.objects[oid]
        if oid == target.id or other.state.position is None or other.class_name == target.class_name:
            continue
        d = math.dist(other.state.position, target.state.position)
        if d < best_dist:
            best, best_dist = other, d
    return best


def _relative_direction(world: WorldState, position: tuple[float, float]) -> str:
    agent = world.agent
    vx = position[0] - agent.position[0]
    vy = position[1] - agent.position[1]
    hx, hy = agent.heading_vector()
    forward = vx * hx + vy * hy
    right = vx * hy - vy * hx
    if abs(forward) >= abs(right):
        return "straight ahead" if forward >= 0 else "behind you"
    return "on your right" if right >= 0 else "on your left"
