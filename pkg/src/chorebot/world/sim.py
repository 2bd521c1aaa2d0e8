"""Simulation engine: preconditions, action effects, observations, and goals.

All operations are pure: `step` and `look_around` return a fresh WorldState.
Determinism is absolute — identical (state, command) pairs yield identical
successors, which is what makes trajectory replay exact.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .catalog import OBJECT_CLASSES, Affordance, nominal_size
from .types import (
    ActionCommand,
    AgentPose,
    Detection,
    ManipulationKind,
    MissionGoal,
    NavigationKind,
    ObjectInstance,
    ObjectRef,
    ObjectState,
    Observation,
    Room,
    WorldState,
)

INTERACTION_RADIUS = 1.5
MOVE_STEP = 0.5
FOV_DEGREES = 90
MAX_DETECTIONS = 36

# Classes that act as water sources for Fill/Clean when toggled on.
WATER_SOURCES = {"sink", "coffee maker"}

M = ManipulationKind

REQUIRED_AFFORDANCE: dict[ManipulationKind, Optional[Affordance]] = {
    M.PICKUP: Affordance.PICKUPABLE,
    M.PLACE: Affordance.RECEPTACLE,
    M.OPEN: Affordance.OPENABLE,
    M.CLOSE: Affordance.OPENABLE,
    M.TOGGLE: Affordance.TOGGLEABLE,
    M.FILL: Affordance.FILLABLE,
    M.CLEAN: Affordance.DIRTYABLE,
    M.POUR: None,  # target must be a receptacle or fillable; checked below
    M.BREAK: Affordance.BREAKABLE,
    M.SCAN: None,
}


class ViolationKind(str, Enum):
    TOO_FAR = "TooFar"
    WRONG_AFFORDANCE = "WrongAffordance"
    BAD_STATE = "BadState"
    BLOCKED = "Blocked"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    state_field: Optional[str] = None

    def __str__(self) -> str:
        if self.kind is ViolationKind.BAD_STATE:
            return f"BadState({self.state_field})"
        return self.kind.value


OK = None  # interaction_allowed returns None when the interaction is legal


class ErrorKind(str, Enum):
    UNRESOLVED_REFERENCE = "UnresolvedReference"
    PRECONDITION_FAILED = "PreconditionFailed"
    INVENTORY_FULL = "InventoryFull"
    NOTHING_HELD = "NothingHeld"


@dataclass(frozen=True)
class ActionOutcome:
    success: bool
    error: Optional[ErrorKind] = None
    violation: Optional[Violation] = None
    object_id: Optional[str] = None  # resolved target, when any

    def to_json(self) -> dict:
        doc: dict = {"success": self.success}
        if self.error is not None:
            doc["error"] = self.error.value
        if self.violation is not None:
            doc["violation"] = str(self.violation)
        if self.object_id is not None:
            doc["objectId"] = self.object_id
        return doc


Resolver = Callable[[ObjectRef], Optional[str]]


def clone_world(state: WorldState) -> WorldState:
    """Structure-preserving copy, much cheaper than deepcopy for small worlds."""
    rooms = [
        Room(
            name=r.name,
            bounds=r.bounds,
            viewpoints=list(r.viewpoints),
            object_ids=set(r.object_ids),
        )
        for r in state.rooms
    ]
    objects = {
        oid: ObjectInstance(
            id=o.id,
            class_name=o.class_name,
            color=o.color,
            state=ObjectState(
                is_open=o.state.is_open,
                is_on=o.state.is_on,
                is_dirty=o.state.is_dirty,
                is_filled=o.state.is_filled,
                is_broken=o.state.is_broken,
                is_chilled=o.state.is_chilled,
                is_hot=o.state.is_hot,
                contained_in=o.state.contained_in,
                position=o.state.position,
            ),
        )
        for oid, o in state.objects.items()
    }
    return WorldState(
        rooms=rooms,
        objects=objects,
        agent=AgentPose(room=state.agent.room, position=state.agent.position, heading=state.agent.heading),
        inventory=state.inventory,
        step_count=state.step_count,
        frame_count=state.frame_count,
        rng_seed=state.rng_seed,
        scanned=set(state.scanned),
        noise=state.noise,
        layout_name=state.layout_name,
    )


def _distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _is_hidden(state: WorldState, obj: ObjectInstance) -> bool:
    """Inside a closed openable container (and therefore unobservable)."""
    container_id = obj.state.contained_in
    if container_id is None:
        return False
    container = state.objects.get(container_id)
    if container is None:
        return False
    return container.has(Affordance.OPENABLE) and not container.state.is_open


def interaction_allowed(
    state: WorldState,
    kind: ManipulationKind,
    object_id: str,
    radius: float = INTERACTION_RADIUS,
) -> Optional[Violation]:
    """None when legal, otherwise the first violated precondition.

    Checks, in order: reachability (distance), affordance, object-state
    preconditions. Scan skips the state checks entirely; a broken object
    rejects everything except Scan.
    """
    obj = state.objects[object_id]
    if obj.state.position is None:
        return Violation(ViolationKind.BAD_STATE, "held")
    if _distance(state.agent.position, obj.state.position) >= radius:
        return Violation(ViolationKind.TOO_FAR)

    needed = REQUIRED_AFFORDANCE[kind]
    if needed is not None and not obj.has(needed):
        return Violation(ViolationKind.WRONG_AFFORDANCE)
    if kind is M.POUR and not (obj.has(Affordance.RECEPTACLE) or obj.has(Affordance.FILLABLE)):
        return Violation(ViolationKind.WRONG_AFFORDANCE)

    if kind is M.SCAN:
        return OK

    if obj.state.is_broken:
        return Violation(ViolationKind.BAD_STATE, "isBroken")
    if kind is M.OPEN and obj.state.is_open:
        return Violation(ViolationKind.BAD_STATE, "isOpen")
    if kind is M.CLOSE and not obj.state.is_open:
        return Violation(ViolationKind.BAD_STATE, "isOpen")
    if kind is M.PICKUP and _is_hidden(state, obj):
        return Violation(ViolationKind.BAD_STATE, "containedIn")
    if kind is M.PLACE and obj.has(Affordance.OPENABLE) and not obj.state.is_open:
        return Violation(ViolationKind.BAD_STATE, "isOpen")
    if kind is M.FILL:
        if obj.state.is_filled:
            return Violation(ViolationKind.BAD_STATE, "isFilled")
        return _water_source_violation(state, obj)
    if kind is M.CLEAN:
        if not obj.state.is_dirty:
            return Violation(ViolationKind.BAD_STATE, "isDirty")
        return _water_source_violation(state, obj)
    return OK


def _water_source_violation(state: WorldState, obj: ObjectInstance) -> Optional[Violation]:
    """Fill/Clean work on objects sitting inside a running sink-like source."""
    container_id = obj.state.contained_in
    if container_id is None or state.objects[container_id].class_name not in WATER_SOURCES:
        return Violation(ViolationKind.BAD_STATE, "containedIn")
    if not state.objects[container_id].state.is_on:
        return Violation(ViolationKind.BAD_STATE, "isOn")
    return OK


def _fail(state: WorldState, error: ErrorKind, violation: Violation | None = None,
          object_id: str | None = None) -> tuple[WorldState, ActionOutcome]:
    state.step_count += 1
    return state, ActionOutcome(False, error=error, violation=violation, object_id=object_id)


def step(
    state: WorldState,
    cmd: ActionCommand,
    resolver: Optional[Resolver] = None,
    radius: float = INTERACTION_RADIUS,
) -> tuple[WorldState, ActionOutcome]:
    """Apply one command, returning the successor state and the outcome.

    The step counter advances exactly once per call even on failure
    (LookAround advances by 4: three rotations plus the sweep itself).
    """
    new = clone_world(state)

    if isinstance(cmd.kind, NavigationKind):
        return _step_navigation(new, cmd, resolver, radius)

    if cmd.ref is None:
        return _fail(new, ErrorKind.UNRESOLVED_REFERENCE)
    object_id = resolver(cmd.ref) if resolver is not None else None
    if object_id is None or object_id not in new.objects:
        return _fail(new, ErrorKind.UNRESOLVED_REFERENCE)

    kind = cmd.kind
    if kind is M.PICKUP and new.inventory is not None:
        return _fail(new, ErrorKind.INVENTORY_FULL, object_id=object_id)
    if kind in (M.PLACE, M.POUR) and new.inventory is None:
        return _fail(new, ErrorKind.NOTHING_HELD, object_id=object_id)
    if kind is M.POUR and not new.objects[new.inventory].state.is_filled:
        return _fail(
            new, ErrorKind.PRECONDITION_FAILED,
            Violation(ViolationKind.BAD_STATE, "isFilled"), object_id,
        )

    violation = interaction_allowed(new, kind, object_id, radius)
    if violation is not None:
        return _fail(new, ErrorKind.PRECONDITION_FAILED, violation, object_id)

    _apply_manipulation(new, kind, object_id)
    new.step_count += 1
    return new, ActionOutcome(True, object_id=object_id)


def _apply_manipulation(state: WorldState, kind: ManipulationKind, object_id: str) -> None:
    obj = state.objects[object_id]
    if kind is M.PICKUP:
        room = state.room_of_object(object_id)
        if room is not None:
            room.object_ids.discard(object_id)
        obj.state.position = None
        obj.state.contained_in = None
        state.inventory = object_id
    elif kind is M.PLACE:
        held = state.objects[state.inventory]
        held.state.contained_in = object_id
        held.state.position = obj.state.position
        room = state.room_of_object(object_id)
        if room is not None:
            room.object_ids.add(held.id)
        state.inventory = None
    elif kind is M.OPEN:
        obj.state.is_open = True
    elif kind is M.CLOSE:
        obj.state.is_open = False
    elif kind is M.TOGGLE:
        obj.state.is_on = not obj.state.is_on
    elif kind is M.FILL:
        obj.state.is_filled = True
    elif kind is M.CLEAN:
        obj.state.is_dirty = False
    elif kind is M.POUR:
        held = state.objects[state.inventory]
        held.state.is_filled = False
        if obj.has(Affordance.FILLABLE) and not obj.state.is_filled:
            obj.state.is_filled = True
    elif kind is M.BREAK:
        obj.state.is_broken = True
    elif kind is M.SCAN:
        state.scanned.add(object_id)


def _step_navigation(
    state: WorldState,
    cmd: ActionCommand,
    resolver: Optional[Resolver],
    radius: float,
) -> tuple[WorldState, ActionOutcome]:
    kind = cmd.kind
    agent = state.agent
    if kind is NavigationKind.ROTATE_LEFT:
        agent.heading = (agent.heading + 90) % 360
    elif kind is NavigationKind.ROTATE_RIGHT:
        agent.heading = (agent.heading - 90) % 360
    elif kind in (NavigationKind.MOVE_FORWARD, NavigationKind.MOVE_BACKWARD):
        sign = 1.0 if kind is NavigationKind.MOVE_FORWARD else -1.0
        hx, hy = agent.heading_vector()
        target = (agent.position[0] + sign * MOVE_STEP * hx, agent.position[1] + sign * MOVE_STEP * hy)
        if not state.current_room().contains(target):
            return _fail(state, ErrorKind.PRECONDITION_FAILED, Violation(ViolationKind.BLOCKED))
        agent.position = target
    elif kind is NavigationKind.LOOK_AROUND:
        state.step_count += 4
        return state, ActionOutcome(True)
    elif kind is NavigationKind.GOTO:
        return _step_goto(state, cmd, resolver, radius)
    state.step_count += 1
    return state, ActionOutcome(True)


def _step_goto(
    state: WorldState,
    cmd: ActionCommand,
    resolver: Optional[Resolver],
    radius: float,
) -> tuple[WorldState, ActionOutcome]:
    agent = state.agent
    if cmd.target is not None:
        for room in state.rooms:
            if room.name == cmd.target:
                agent.room = room.name
                agent.position = room.center
                state.step_count += 1
                return state, ActionOutcome(True)
        found = state.find_viewpoint(cmd.target)
        if found is not None:
            room, vp = found
            agent.room = room.name
            agent.position = vp.position
            state.step_count += 1
            return state, ActionOutcome(True)
        return _fail(state, ErrorKind.UNRESOLVED_REFERENCE)

    if cmd.ref is None:
        return _fail(state, ErrorKind.UNRESOLVED_REFERENCE)
    object_id = resolver(cmd.ref) if resolver is not None else None
    if object_id is None or object_id not in state.objects:
        return _fail(state, ErrorKind.UNRESOLVED_REFERENCE)
    obj = state.objects[object_id]
    if obj.state.position is None:
        return _fail(state, ErrorKind.PRECONDITION_FAILED,
                     Violation(ViolationKind.BAD_STATE, "held"), object_id)
    room = state.room_of_object(object_id)
    if room is None:
        return _fail(state, ErrorKind.UNRESOLVED_REFERENCE, object_id=object_id)

    pos = _goto_pose(room, agent.position if agent.room == room.name else room.center, obj.state.position, radius)
    agent.room = room.name
    agent.position = pos
    agent.heading = _facing_heading(pos, obj.state.position)
    state.step_count += 1
    return state, ActionOutcome(True, object_id=object_id)


def _goto_pose(
    room: Room,
    from_pos: tuple[float, float],
    obj_pos: tuple[float, float],
    radius: float,
) -> tuple[float, float]:
    """Nearest legal pose: stand just inside the interaction radius, on the
    side of the object facing the approach direction, clamped into the room."""
    dx, dy = from_pos[0] - obj_pos[0], from_pos[1] - obj_pos[1]
    norm = math.hypot(dx, dy)
    if norm < 1e-9:
        dx, dy = room.center[0] - obj_pos[0], room.center[1] - obj_pos[1]
        norm = math.hypot(dx, dy)
    if norm < 1e-9:
        dx, dy, norm = 0.0, 1.0, 1.0
    stand = radius * 0.6
    pos = (obj_pos[0] + dx / norm * stand, obj_pos[1] + dy / norm * stand)
    x1, y1, x2, y2 = room.bounds
    return (min(max(pos[0], x1), x2), min(max(pos[1], y1), y2))


def _facing_heading(pos: tuple[float, float], target: tuple[float, float]) -> int:
    """Discrete heading (0/90/180/270) pointing most directly at target."""
    vx, vy = target[0] - pos[0], target[1] - pos[1]
    if vx == 0.0 and vy == 0.0:
        return 0
    angle = math.degrees(math.atan2(vx, vy)) % 360  # 0 = +y, 90 = +x
    return int((round(angle / 90) % 4) * 90)


def render_observation(state: WorldState, frame_index: Optional[int] = None) -> Observation:
    """Project visible objects into the 90-degree frustum as detections.

    Pure with respect to the state: the caller owns frame numbering (defaults
    to the next frame the session would capture). At most 36 detections
    survive, nearest first.
    """
    if frame_index is None:
        frame_index = state.frame_count + 1
    agent = state.agent
    hx, hy = agent.heading_vector()
    rx, ry = hy, -hx  # right-hand basis vector
    room = state.current_room()

    candidates: list[tuple[float, str, Detection]] = []
    for oid in sorted(room.object_ids):
        obj = state.objects[oid]
        if obj.state.position is None or _is_hidden(state, obj):
            continue
        vx = obj.state.position[0] - agent.position[0]
        vy = obj.state.position[1] - agent.position[1]
        f = vx * hx + vy * hy
        l = vx * rx + vy * ry
        if f <= 1e-9 or abs(l) > f + 1e-9:
            continue
        cx = 0.5 + 0.5 * (l / f)
        half = min(max(nominal_size(obj.class_name) / (2.0 * max(f, 0.4)), 0.01), 0.45)
        x1 = min(max(cx - half, 0.0), 1.0)
        x2 = min(max(cx + half, 0.0), 1.0)
        y1, y2 = 0.5 - half, 0.5 + half
        if x2 - x1 <= 1e-6:
            continue
        det = Detection(
            object_id=oid,
            class_label=obj.class_name,
            bbox=(x1, y1, x2, y2),
            area=(x2 - x1) * (y2 - y1),
        )
        candidates.append((math.hypot(vx, vy), oid, det))

    candidates.sort(key=lambda item: (item[0], item[1]))
    detections = [det for _, _, det in candidates[:MAX_DETECTIONS]]
    if not state.noise.exact:
        detections = _apply_noise(state, frame_index, detections)
    return Observation(
        frame_index=frame_index,
        detections=tuple(detections),
        scene_descriptor=f"{room.name} facing {agent.heading}",
        room=room.name,
        heading=agent.heading,
    )


def _apply_noise(state: WorldState, frame_index: int, detections: list[Detection]) -> list[Detection]:
    rng = np.random.default_rng((state.rng_seed, frame_index, 0xD37EC7))
    classes = sorted(OBJECT_CLASSES)
    kept: list[Detection] = []
    for det in detections:
        if rng.random() < state.noise.miss_probability:
            continue
        if rng.random() < state.noise.confusion_probability:
            wrong = classes[int(rng.integers(len(classes)))]
            det = Detection(det.object_id, wrong, det.bbox, det.area)
        kept.append(det)
    return kept


def capture(state: WorldState) -> tuple[WorldState, Observation]:
    """Render the next frame and advance the frame counter."""
    new = clone_world(state)
    obs = render_observation(new)
    new.frame_count += 1
    return new, obs


def look_around(state: WorldState) -> tuple[WorldState, list[Observation]]:
    """Panoramic sweep: four captures at h, h+90, h+180, h+270.

    The final heading returns to h. The step counter advances by 4 (three
    rotations plus the sweep itself) and the frame counter by 4.
    """
    new = clone_world(state)
    start = new.agent.heading
    frames: list[Observation] = []
    for i in range(4):
        new.agent.heading = (start + 90 * i) % 360
        frames.append(render_observation(new))
        new.frame_count += 1
    new.agent.heading = start
    new.step_count += 4
    return new, frames


class GoalEvaluationError(ValueError):
    pass


def goal_satisfied(state: WorldState, goal: MissionGoal) -> bool:
    """True iff every conjunct holds (vacuously true when empty)."""
    return all(_predicate_holds(state, p) for p in goal.predicates)


def _predicate_holds(state: WorldState, pred) -> bool:
    if pred.object_id is not None:
        if pred.object_id not in state.objects:
            raise GoalEvaluationError(f"goal references unknown object id {pred.object_id!r}")
        candidates = [state.objects[pred.object_id]]
    else:
        candidates = [
            o
            for o in state.objects.values()
            if o.class_name == pred.class_name and (pred.color is None or o.color == pred.color)
        ]
    for obj in candidates:
        if _object_satisfies(state, obj, pred.field, pred.value):
            return True
    return False


def _object_satisfies(state: WorldState, obj: ObjectInstance, field_name: str, value) -> bool:
    if field_name == "scanned":
        return (obj.id in state.scanned) == bool(value)
    if field_name == "containedIn":
        actual = obj.state.contained_in
        if isinstance(value, dict):
            if actual is None:
                return False
            container = state.objects[actual]
            return container.class_name == value.get("class") and (
                value.get("color") is None or container.color == value.get("color")
            )
        return actual == value
    if field_name in ObjectState.STATE_FIELDS:
        return obj.state.get_flag(field_name) == bool(value)
    raise GoalEvaluationError(f"unknown goal field {field_name!r}")


def observation_digest(obs: Observation) -> str:
    """Stable content hash used by trajectory logs and replay checking."""
    doc = {
        "frame": obs.frame_index,
        "scene": obs.scene_descriptor,
        "detections": [
            [d.object_id, d.class_label, [round(v, 12) for v in d.bbox], round(d.area, 12)]
            for d in obs.detections
        ],
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
