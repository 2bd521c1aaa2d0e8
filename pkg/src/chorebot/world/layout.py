"""Layout documents: versioned JSON schema, validation, and round-trip I/O."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .catalog import COLORS, OBJECT_CLASSES
from .types import (
    HEADINGS,
    AgentPose,
    ObjectInstance,
    ObjectState,
    Room,
    Viewpoint,
    WorldState,
)

SCHEMA_VERSION = 1
MAX_VIEWPOINTS_PER_ROOM = 8


class LayoutError(ValueError):
    """Malformed or invariant-violating layout document; names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


def _require(doc: dict, key: str, context: str) -> Any:
    if key not in doc:
        raise LayoutError(f"{context}.{key}", "missing required field")
    return doc[key]


def load_layout(doc: dict | str | Path, seed: int = 0) -> WorldState:
    """Build a WorldState from a layout document (dict, JSON string, or path).

    Identical document + seed always produce an identical state.
    """
    if isinstance(doc, Path):
        doc = json.loads(doc.read_text())
    elif isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise LayoutError("document", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise LayoutError("document", "expected a JSON object")

    version = _require(doc, "schemaVersion", "document")
    if version != SCHEMA_VERSION:
        raise LayoutError("schemaVersion", f"expected {SCHEMA_VERSION}, got {version!r}")

    rooms: list[Room] = []
    room_names: set[str] = set()
    for ri, rdoc in enumerate(_require(doc, "rooms", "document")):
        ctx = f"rooms[{ri}]"
        name = _require(rdoc, "name", ctx)
        if name in room_names:
            raise LayoutError(f"{ctx}.name", f"duplicate room name {name!r}")
        room_names.add(name)
        bounds = tuple(float(v) for v in _require(rdoc, "bounds", ctx))
        if len(bounds) != 4 or bounds[0] >= bounds[2] or bounds[1] >= bounds[3]:
            raise LayoutError(f"{ctx}.bounds", f"expected [x1,y1,x2,y2] with x1<x2, y1<y2, got {bounds}")
        viewpoints: list[Viewpoint] = []
        vp_docs = rdoc.get("viewpoints", [])
        if len(vp_docs) > MAX_VIEWPOINTS_PER_ROOM:
            raise LayoutError(f"{ctx}.viewpoints", f"{len(vp_docs)} viewpoints exceed the cap of {MAX_VIEWPOINTS_PER_ROOM}")
        room = Room(name=name, bounds=bounds)  # type: ignore[arg-type]
        for vi, vdoc in enumerate(vp_docs):
            vctx = f"{ctx}.viewpoints[{vi}]"
            vid = _require(vdoc, "id", vctx)
            pos = tuple(float(v) for v in _require(vdoc, "position", vctx))
            if not room.contains(pos):  # type: ignore[arg-type]
                raise LayoutError(f"{vctx}.position", f"viewpoint {vid!r} at {pos} outside room bounds {bounds}")
            viewpoints.append(Viewpoint(id=vid, position=pos))  # type: ignore[arg-type]
        room.viewpoints = viewpoints
        rooms.append(room)
    if not rooms:
        raise LayoutError("rooms", "layout needs at least one room")

    objects: dict[str, ObjectInstance] = {}
    room_by_name = {r.name: r for r in rooms}
    for oi, odoc in enumerate(_require(doc, "objects", "document")):
        ctx = f"objects[{oi}]"
        oid = _require(odoc, "id", ctx)
        if oid in objects:
            raise LayoutError(f"{ctx}.id", f"duplicate object id {oid!r}")
        class_name = _require(odoc, "class", ctx)
        if class_name not in OBJECT_CLASSES:
            raise LayoutError(f"{ctx}.class", f"unknown object class {class_name!r}")
        color = _require(odoc, "color", ctx)
        if color not in COLORS:
            raise LayoutError(f"{ctx}.color", f"unknown color {color!r}")
        position = tuple(float(v) for v in _require(odoc, "position", ctx))
        room_name = _require(odoc, "room", ctx)
        if room_name not in room_by_name:
            raise LayoutError(f"{ctx}.room", f"unknown room {room_name!r}")
        if not room_by_name[room_name].contains(position):  # type: ignore[arg-type]
            raise LayoutError(f"{ctx}.position", f"object {oid!r} at {position} outside room {room_name!r}")
        state = ObjectState(position=position)  # type: ignore[arg-type]
        for flag, value in odoc.get("state", {}).items():
            if flag == "containedIn":
                state.contained_in = value
                continue
            if flag not in ObjectState.STATE_FIELDS:
                raise LayoutError(f"{ctx}.state.{flag}", "unknown state field")
            state.set_flag(flag, bool(value))
        obj = ObjectInstance(id=oid, class_name=class_name, color=color, state=state)
        _validate_object_state(obj, ctx)
        objects[oid] = obj
        room_by_name[room_name].object_ids.add(oid)

    for oid, obj in objects.items():
        target = obj.state.contained_in
        if target is not None:
            if target not in objects:
                raise LayoutError(f"objects[{oid}].state.containedIn", f"unknown container {target!r}")
            from .catalog import Affordance

            if Affordance.RECEPTACLE not in objects[target].affordances:
                raise LayoutError(f"objects[{oid}].state.containedIn", f"{target!r} is not a receptacle")

    adoc = _require(doc, "agent", "document")
    agent_room = _require(adoc, "room", "agent")
    if agent_room not in room_by_name:
        raise LayoutError("agent.room", f"unknown room {agent_room!r}")
    agent_pos = tuple(float(v) for v in _require(adoc, "position", "agent"))
    if not room_by_name[agent_room].contains(agent_pos):  # type: ignore[arg-type]
        raise LayoutError("agent.position", f"{agent_pos} outside room {agent_room!r}")
    heading = int(adoc.get("heading", 0))
    if heading not in HEADINGS:
        raise LayoutError("agent.heading", f"heading must be one of {HEADINGS}, got {heading}")

    return WorldState(
        rooms=rooms,
        objects=objects,
        agent=AgentPose(room=agent_room, position=agent_pos, heading=heading),  # type: ignore[arg-type]
        rng_seed=seed,
        layout_name=doc.get("name", "unnamed"),
    )


def _validate_object_state(obj: ObjectInstance, ctx: str) -> None:
    from .catalog import Affordance

    rules = [
        ("isOpen", obj.state.is_open, Affordance.OPENABLE),
        ("isFilled", obj.state.is_filled, Affordance.FILLABLE),
        ("isBroken", obj.state.is_broken, Affordance.BREAKABLE),
        ("isOn", obj.state.is_on, Affordance.TOGGLEABLE),
        ("isDirty", obj.state.is_dirty, Affordance.DIRTYABLE),
    ]
    for flag, value, needed in rules:
        if value and needed not in obj.affordances:
            raise LayoutError(f"{ctx}.state.{flag}", f"{obj.class_name!r} is not {needed.value}")


def save_layout(state: WorldState) -> dict:
    """Serialize a WorldState back to its normalized layout document."""
    rooms = []
    for room in state.rooms:
        rooms.append(
            {
                "name": room.name,
                "bounds": list(room.bounds),
                "viewpoints": [{"id": vp.id, "position": list(vp.position)} for vp in room.viewpoints],
            }
        )
    objects = []
    for oid in sorted(state.objects):
        obj = state.objects[oid]
        room = state.room_of_object(oid)
        state_doc: dict = {}
        for flag in ObjectState.STATE_FIELDS:
            if obj.state.get_flag(flag):
                state_doc[flag] = True
        if obj.state.contained_in is not None:
            state_doc["containedIn"] = obj.state.contained_in
        entry: dict = {
            "id": oid,
            "class": obj.class_name,
            "color": obj.color,
            "position": list(obj.state.position) if obj.state.position else None,
            "room": room.name if room else None,
        }
        if state_doc:
            entry["state"] = state_doc
        objects.append(entry)
    return {
        "schemaVersion": SCHEMA_VERSION,
        "name": state.layout_name,
        "rooms": rooms,
        "objects": objects,
        "agent": {
            "room": state.agent.room,
            "position": list(state.agent.position),
            "heading": state.agent.heading,
        },
    }
