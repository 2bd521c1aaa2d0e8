"""Domain types for the symbolic household simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .catalog import Affordance, affordances_of

HEADINGS = (0, 90, 180, 270)


@dataclass
class ObjectState:
    """Mutable per-object flags plus placement.

    `position` is None while the object is held by the agent.
    """

    is_open: bool = False
    is_on: bool = False
    is_dirty: bool = False
    is_filled: bool = False
    is_broken: bool = False
    is_chilled: bool = False
    is_hot: bool = False
    contained_in: Optional[str] = None
    position: Optional[tuple[float, float]] = None

    STATE_FIELDS = ("isOpen", "isOn", "isDirty", "isFilled", "isBroken", "isChilled", "isHot")

    def get_flag(self, name: str) -> bool:
        return {
            "isOpen": self.is_open,
            "isOn": self.is_on,
            "isDirty": self.is_dirty,
            "isFilled": self.is_filled,
            "isBroken": self.is_broken,
            "isChilled": self.is_chilled,
            "isHot": self.is_hot,
        }[name]

    def set_flag(self, name: str, value: bool) -> None:
        attr = {
            "isOpen": "is_open",
            "isOn": "is_on",
            "isDirty": "is_dirty",
            "isFilled": "is_filled",
            "isBroken": "is_broken",
            "isChilled": "is_chilled",
            "isHot": "is_hot",
        }[name]
        setattr(self, attr, value)


@dataclass
class ObjectInstance:
    id: str
    class_name: str
    color: str
    state: ObjectState = field(default_factory=ObjectState)

    @property
    def affordances(self) -> frozenset[Affordance]:
        return affordances_of(self.class_name)

    def has(self, affordance: Affordance) -> bool:
        return affordance in self.affordances


@dataclass(frozen=True)
class Viewpoint:
    id: str
    position: tuple[float, float]


@dataclass
class Room:
    name: str
    bounds: tuple[float, float, float, float]  # x1, y1, x2, y2
    viewpoints: list[Viewpoint] = field(default_factory=list)
    object_ids: set[str] = field(default_factory=set)

    def contains(self, pos: tuple[float, float]) -> bool:
        x1, y1, x2, y2 = self.bounds
        return x1 <= pos[0] <= x2 and y1 <= pos[1] <= y2

    @property
    def center(self) -> tuple[float, float]:
        x1, y1, x2, y2 = self.bounds
        return ((x1 + x2) / 2, (y1 + y2) / 2)


@dataclass
class AgentPose:
    room: str
    position: tuple[float, float]
    heading: int = 0  # degrees, multiple of 90; 0 points +y, 90 points +x

    def heading_vector(self) -> tuple[float, float]:
        rad = math.radians(self.heading)
        return (math.sin(rad), math.cos(rad))


@dataclass(frozen=True)
class Detection:
    object_id: str
    class_label: str
    bbox: tuple[float, float, float, float]  # normalized x1, y1, x2, y2
    area: float


@dataclass(frozen=True)
class Observation:
    frame_index: int
    detections: tuple[Detection, ...]
    scene_descriptor: str  # "<room> facing <heading>"
    room: str
    heading: int


class ManipulationKind(str, Enum):
    PICKUP = "PickUp"
    PLACE = "Place"
    OPEN = "Open"
    CLOSE = "Close"
    TOGGLE = "Toggle"
    FILL = "Fill"
    CLEAN = "Clean"
    POUR = "Pour"
    BREAK = "Break"
    SCAN = "Scan"


class NavigationKind(str, Enum):
    MOVE_FORWARD = "MoveForward"
    MOVE_BACKWARD = "MoveBackward"
    ROTATE_LEFT = "RotateLeft"
    ROTATE_RIGHT = "RotateRight"
    LOOK_AROUND = "LookAround"
    GOTO = "GoTo"


@dataclass(frozen=True)
class ObjectRef:
    """Reference to an object through a previously assigned visual token."""

    frame_index: int
    visual_token: int


@dataclass(frozen=True)
class ActionCommand:
    """A single executable command.

    Navigation commands carry either nothing (primitive moves) or a GoTo
    target: a room name, a viewpoint id, or an ObjectRef. Manipulation
    commands always carry an ObjectRef.
    """

    kind: ManipulationKind | NavigationKind
    ref: Optional[ObjectRef] = None
    target: Optional[str] = None  # GoTo room name or viewpoint id

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind.value}
        if self.ref is not None:
            doc["ref"] = {"frame": self.ref.frame_index, "visual": self.ref.visual_token}
        if self.target is not None:
            doc["target"] = self.target
        return doc

    @staticmethod
    def from_json(doc: dict) -> "ActionCommand":
        kind_raw = doc["kind"]
        kind: ManipulationKind | NavigationKind
        try:
            kind = ManipulationKind(kind_raw)
        except ValueError:
            kind = NavigationKind(kind_raw)
        ref = None
        if "ref" in doc and doc["ref"] is not None:
            ref = ObjectRef(doc["ref"]["frame"], doc["ref"]["visual"])
        return ActionCommand(kind=kind, ref=ref, target=doc.get("target"))


@dataclass(frozen=True)
class GoalPredicate:
    """One conjunct of a mission goal.

    `ref` selects an object by explicit id or by (class, color); `field` is a
    state flag name, "containedIn", or "scanned"; `value` is the required
    flag/containment value. Class/color references are existential over the
    matching instances.
    """

    field: str
    value: object
    object_id: Optional[str] = None
    class_name: Optional[str] = None
    color: Optional[str] = None

    def to_json(self) -> dict:
        doc: dict = {"field": self.field, "value": self.value}
        if self.object_id is not None:
            doc["objectId"] = self.object_id
        if self.class_name is not None:
            doc["class"] = self.class_name
        if self.color is not None:
            doc["color"] = self.color
        return doc

    @staticmethod
    def from_json(doc: dict) -> "GoalPredicate":
        return GoalPredicate(
            field=doc["field"],
            value=doc["value"],
            object_id=doc.get("objectId"),
            class_name=doc.get("class"),
            color=doc.get("color"),
        )


@dataclass(frozen=True)
class MissionGoal:
    predicates: tuple[GoalPredicate, ...]

    def to_json(self) -> list[dict]:
        return [p.to_json() for p in self.predicates]

    @staticmethod
    def from_json(docs: list[dict]) -> "MissionGoal":
        return MissionGoal(tuple(GoalPredicate.from_json(d) for d in docs))


@dataclass
class DetectorNoise:
    """Optional detector-error emulation: per-detection miss and class swap."""

    miss_probability: float = 0.0
    confusion_probability: float = 0.0

    @property
    def exact(self) -> bool:
        return self.miss_probability == 0.0 and self.confusion_probability == 0.0


@dataclass
class WorldState:
    rooms: list[Room]
    objects: dict[str, ObjectInstance]
    agent: AgentPose
    inventory: Optional[str] = None
    step_count: int = 0
    frame_count: int = 0
    rng_seed: int = 0
    scanned: set[str] = field(default_factory=set)
    noise: DetectorNoise = field(default_factory=DetectorNoise)
    layout_name: str = "unnamed"

    def room_named(self, name: str) -> Room:
        for room in self.rooms:
            if room.name == name:
                return room
        raise KeyError(f"unknown room: {name!r}")

    def current_room(self) -> Room:
        return self.room_named(self.agent.room)

    def find_viewpoint(self, viewpoint_id: str) -> tuple[Room, Viewpoint] | None:
        for room in self.rooms:
            for vp in room.viewpoints:
                if vp.id == viewpoint_id:
                    return room, vp
        return None

    def room_of_object(self, object_id: str) -> Room | None:
        for room in self.rooms:
            if object_id in room.object_ids:
                return room
        return None


__all__ = [
    "ActionCommand",
    "AgentPose",
    "Detection",
    "DetectorNoise",
    "GoalPredicate",
    "HEADINGS",
    "ManipulationKind",
    "MissionGoal",
    "NavigationKind",
    "ObjectInstance",
    "ObjectRef",
    "ObjectState",
    "Observation",
    "Room",
    "Viewpoint",
    "WorldState",
    "replace",
]
