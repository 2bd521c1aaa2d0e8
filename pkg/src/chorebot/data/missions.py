"""Mission definitions (challenge-definition-style) and their generation.

A mission bundles a layout, initial state deltas, a conjunctive goal, and an
ordered instruction list with optional clarification QA. Role object ids
(target, receptacle, sink, device, source) are recorded so the expert planner
can re-derive its script. Only expert-solvable missions are ever emitted.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..world import GoalPredicate, MissionGoal, WorldState, load_layout
from ..world.catalog import COLORS
from ..world.generate import WALL_MARGIN, generate_layout
from .clarifications import ClarificationQA, QType, gen_clarification
from .templates import paraphrase

SUPPORTED_CATEGORIES = (
    "pickup&deliver",
    "clean&deliver",
    "fill&deliver",
    "breakObject",
    "toggleDevice",
    "pourContainer",
    "scanObject",
    "insertInDevice",
)

TARGET_POOLS: dict[str, list[str]] = {
    "pickup&deliver": ["mug", "plate", "bowl", "apple", "banana", "cereal box", "milk carton",
                       "book", "cartridge", "trophy", "clock", "vase"],
    "clean&deliver": ["mug", "plate", "bowl", "pot", "fork", "knife", "spoon"],
    "fill&deliver": ["mug", "bowl", "vase", "pot"],
    "breakObject": ["window", "mirror", "vase", "clock", "plate", "mug", "television", "lamp"],
    "toggleDevice": ["lamp", "radio", "computer", "television", "coffee maker", "laser"],
    "scanObject": ["mug", "book", "cartridge", "floppy disk", "trophy", "lamp", "plant", "vase"],
}
POUR_SOURCES = ["mug", "bowl", "pot", "milk carton", "cereal box"]
POUR_TARGETS = ["bowl", "mug", "pot", "sink", "bin"]
INSERT_ITEMS = ["cartridge", "floppy disk", "book", "mug"]
INSERT_DEVICES = ["printer", "cabinet", "fridge", "box"]
RECEPTACLES = ["desk", "table", "shelf", "counter", "sofa", "bin"]


@dataclass(frozen=True)
class InstructionSpec:
    text: str
    qa: Optional[ClarificationQA] = None
    target_object_id: Optional[str] = None  # generator ground truth for localization metrics
    plan: tuple = ()  # expert plan steps, e.g. ("approach", oid) / ("manip", verb, oid)

    def to_json(self) -> dict:
        doc: dict = {"text": self.text, "plan": [list(step) for step in self.plan]}
        if self.qa is not None:
            doc["qa"] = self.qa.to_json()
        if self.target_object_id is not None:
            doc["targetObjectId"] = self.target_object_id
        return doc

    @staticmethod
    def from_json(doc: dict) -> "InstructionSpec":
        qa = ClarificationQA.from_json(doc["qa"]) if "qa" in doc else None
        return InstructionSpec(
            doc["text"], qa, doc.get("targetObjectId"),
            plan=tuple(tuple(step) for step in doc.get("plan", [])),
        )


@dataclass
class CDFMission:
    mission_id: str
    category: str
    layout: dict
    initial_state: list[dict]
    goal: MissionGoal
    instructions: list[InstructionSpec]
    roles: dict[str, str] = field(default_factory=dict)
    expert_actions: int = 0  # ground-truth action count, filled at generation

    def to_json(self) -> dict:
        return {
            "schemaVersion": 1,
            "id": self.mission_id,
            "category": self.category,
            "layout": self.layout,
            "initialState": self.initial_state,
            "goal": self.goal.to_json(),
            "instructions": [i.to_json() for i in self.instructions],
            "roles": self.roles,
            "expertActions": self.expert_actions,
        }

    @staticmethod
    def from_json(doc: dict) -> "CDFMission":
        if doc.get("schemaVersion") != 1:
            raise ValueError(f"unsupported mission schema version {doc.get('schemaVersion')!r}")
        return CDFMission(
            mission_id=doc["id"],
            category=doc["category"],
            layout=doc["layout"],
            initial_state=doc["initialState"],
            goal=MissionGoal.from_json(doc["goal"]),
            instructions=[InstructionSpec.from_json(i) for i in doc["instructions"]],
            roles=doc.get("roles", {}),
            expert_actions=doc.get("expertActions", 0),
        )

    def build_world(self, seed: int = 0) -> WorldState:
        world = load_layout(self.layout, seed=seed)
        for delta in self.initial_state:
            obj = world.objects[delta["objectId"]]
            if delta["field"] == "containedIn":
                obj.state.contained_in = delta["value"]
            else:
                obj.state.set_flag(delta["field"], bool(delta["value"]))
        return world


def save_missions(missions: list[CDFMission], path: str | Path) -> None:
    doc = {"schemaVersion": 1, "missions": [m.to_json() for m in missions]}
    Path(path).write_text(json.dumps(doc, indent=1))


def load_missions(path: str | Path) -> list[CDFMission]:
    doc = json.loads(Path(path).read_text())
    if doc.get("schemaVersion") != 1:
        raise ValueError("unsupported missions file schema version")
    return [CDFMission.from_json(m) for m in doc["missions"]]


# -- generation ---------------------------------------------------------------


class MissionGenerationError(ValueError):
    pass


def _inject_object(layout: dict, rng: random.Random, class_name: str,
                   color: Optional[str] = None, room: Optional[str] = None) -> str:
    rooms = layout["rooms"]
    room_doc = next((r for r in rooms if r["name"] == room), None) if room else None
    if room_doc is None:
        room_doc = rooms[rng.randrange(len(rooms))]
    x1, y1, x2, y2 = room_doc["bounds"]
    existing = {o["id"] for o in layout["objects"]}
    index = 0
    base = class_name.replace(" ", "_")
    while f"{base}_{index}" in existing:
        index += 1
    oid = f"{base}_{index}"
    layout["objects"].append({
        "id": oid,
        "class": class_name,
        "color": color or rng.choice(COLORS),
        "position": [round(rng.uniform(x1 + WALL_MARGIN, x2 - WALL_MARGIN), 2),
                     round(rng.uniform(y1 + WALL_MARGIN, y2 - WALL_MARGIN), 2)],
        "room": room_doc["name"],
    })
    return oid


def _find_or_inject(layout: dict, rng: random.Random, class_name: str) -> str:
    matches = [o["id"] for o in layout["objects"] if o["class"] == class_name]
    if matches:
        return rng.choice(matches)
    return _inject_object(layout, rng, class_name)


def _mention_for(layout: dict, oid: str, rng: random.Random, force_color: bool = False) -> str:
    obj = next(o for o in layout["objects"] if o["id"] == oid)
    same_class = [o for o in layout["objects"] if o["class"] == obj["class"]]
    ambiguous = len(same_class) > 1
    if force_color or (ambiguous and rng.random() < 0.5):
        return f"{obj['color']} {obj['class']}"
    return obj["class"]


def _maybe_qa(world: WorldState, target_id: str, rng: random.Random,
              qa_rate: float) -> Optional[ClarificationQA]:
    if rng.random() >= qa_rate:
        return None
    target = world.objects[target_id]
    same_class = sum(1 for o in world.objects.values() if o.class_name == target.class_name)
    pool = [QType.DESCRIPTION, QType.LOCATION, QType.DIRECTION, QType.OTHER]
    if same_class > 1:
        pool.extend([QType.REFERENCE, QType.REFERENCE])  # favor the disambiguating kind
    return gen_clarification(world, target, rng.choice(pool), rng)


def generate_mission(
    category: str,
    rng: random.Random,
    mission_id: str,
    distractor_rate: float = 0.5,
    qa_rate: float = 0.6,
    ambiguous: bool = False,
) -> CDFMission:
    """One mission of the given category over a fresh randomized layout.

    With `ambiguous` a same-class distractor of another color shares the
    target's room, the instruction omits the color, and a reference
    clarification is always attached (the referential-disambiguation probe).
    Solvability is checked by the caller (generate_missions) by actually
    running the expert planner.
    """
    if category not in SUPPORTED_CATEGORIES:
        raise MissionGenerationError(f"unsupported mission category {category!r}")
    layout = generate_layout(rng, name=f"{mission_id}-layout")
    roles: dict[str, str] = {}
    deltas: list[dict] = []
    rooms = [r["name"] for r in layout["rooms"]]

    if category in ("pickup&deliver", "clean&deliver", "fill&deliver"):
        target_cls = rng.choice(TARGET_POOLS[category])
        target = _inject_object(layout, rng, target_cls, room=rng.choice(rooms))
        recv = _find_or_inject(layout, rng, rng.choice(RECEPTACLES))
        roles = {"target": target, "receptacle": recv}
        if category != "pickup&deliver":
            roles["sink"] = _find_or_inject(layout, rng, "sink")
        if category == "clean&deliver":
            deltas.append({"objectId": target, "field": "isDirty", "value": True})
        if rng.random() < distractor_rate:
            target_doc = next(o for o in layout["objects"] if o["id"] == target)
            other_colors = [c for c in COLORS if c != target_doc["color"]]
            _inject_object(layout, rng, target_cls, color=rng.choice(other_colors),
                           room=rng.choice(rooms))
    elif category == "pourContainer":
        source = _inject_object(layout, rng, rng.choice(POUR_SOURCES), room=rng.choice(rooms))
        target = _find_or_inject(layout, rng, rng.choice(POUR_TARGETS))
        while target == source:
            target = _inject_object(layout, rng, rng.choice(POUR_TARGETS))
        roles = {"source": source, "target": target}
        deltas.append({"objectId": source, "field": "isFilled", "value": True})
    elif category == "insertInDevice":
        item = _inject_object(layout, rng, rng.choice(INSERT_ITEMS), room=rng.choice(rooms))
        device = _find_or_inject(layout, rng, rng.choice(INSERT_DEVICES))
        roles = {"item": item, "device": device}
    else:  # breakObject, toggleDevice, scanObject
        target_cls = rng.choice(TARGET_POOLS[category])
        target_room = layout["agent"]["room"] if ambiguous else rng.choice(rooms)
        target = _inject_object(layout, rng, target_cls, room=target_room)
        roles = {"target": target}
        if category == "toggleDevice":
            deltas.append({"objectId": target, "field": "isOn", "value": False})
        if ambiguous or rng.random() < distractor_rate:
            target_doc = next(o for o in layout["objects"] if o["id"] == target)
            other_colors = [c for c in COLORS if c != target_doc["color"]]
            _inject_object(layout, rng, target_cls, color=rng.choice(other_colors),
                           room=target_room if ambiguous else rng.choice(rooms))

    mission = CDFMission(
        mission_id=mission_id,
        category=category,
        layout=layout,
        initial_state=deltas,
        goal=_goal_for(category, roles),
        instructions=[],
        roles=roles,
    )
    world = mission.build_world()
    if ambiguous:
        mission.instructions = _ambiguous_instructions(mission, world, rng)
    else:
        mission.instructions = _instructions_for(mission, world, rng, qa_rate)
    return mission


def _ambiguous_instructions(mission: CDFMission, world: WorldState,
                            rng: random.Random) -> list[InstructionSpec]:
    """Color-free mention of a duplicated class plus a reference answer."""
    from .clarifications import QType, gen_clarification

    target = mission.roles["target"]
    target_doc = next(o for o in mission.layout["objects"] if o["id"] == target)
    verb = {"breakObject": "break", "toggleDevice": "toggle", "scanObject": "scan"}.get(
        mission.category, "goto_object")
    qa = gen_clarification(world, world.objects[target], QType.REFERENCE, rng)
    return [InstructionSpec(
        text=paraphrase(verb, {"object": target_doc["class"]}, rng),
        qa=qa,
        target_object_id=target,
        plan=(("approach", target), ("manip", verb, target)),
    )]


def _goal_for(category: str, roles: dict[str, str]) -> MissionGoal:
    g = GoalPredicate
    if category == "pickup&deliver":
        return MissionGoal((g("containedIn", roles["receptacle"], object_id=roles["target"]),))
    if category == "clean&deliver":
        return MissionGoal((
            g("isDirty", False, object_id=roles["target"]),
            g("containedIn", roles["receptacle"], object_id=roles["target"]),
        ))
    if category == "fill&deliver":
        return MissionGoal((
            g("isFilled", True, object_id=roles["target"]),
            g("containedIn", roles["receptacle"], object_id=roles["target"]),
        ))
    if category == "pourContainer":
        return MissionGoal((
            g("isFilled", False, object_id=roles["source"]),
            g("isFilled", True, object_id=roles["target"]),
        ))
    if category == "breakObject":
        return MissionGoal((g("isBroken", True, object_id=roles["target"]),))
    if category == "toggleDevice":
        return MissionGoal((g("isOn", True, object_id=roles["target"]),))
    if category == "scanObject":
        return MissionGoal((g("scanned", True, object_id=roles["target"]),))
    if category == "insertInDevice":
        return MissionGoal((g("containedIn", roles["device"], object_id=roles["item"]),))
    raise MissionGenerationError(f"no goal rule for {category!r}")


def _instructions_for(mission: CDFMission, world: WorldState, rng: random.Random,
                      qa_rate: float) -> list[InstructionSpec]:
    """Instruction list plus aligned expert plans.

    A room-navigation instruction is inserted whenever the next referent
    lives in a different room than the (simulated) agent position, so every
    referent is reachable by a current-room search.
    """
    roles = mission.roles
    layout = mission.layout
    category = mission.category
    current_room = layout["agent"]["room"]
    out: list[InstructionSpec] = []

    def room_of(oid: str) -> str:
        return next(o["room"] for o in layout["objects"] if o["id"] == oid)

    def nav_to(oid: str) -> None:
        nonlocal current_room
        room = room_of(oid)
        if room != current_room:
            out.append(InstructionSpec(
                text=paraphrase("goto_room", {"room": room}, rng),
                plan=(("goto_room", room),),
            ))
            current_room = room

    def spec(action: str, oid: str, slots: dict[str, str], plan: tuple) -> None:
        nav_to(oid)
        out.append(InstructionSpec(
            text=paraphrase(action, slots, rng),
            qa=_maybe_qa(world, oid, rng, qa_rate),
            target_object_id=oid,
            plan=plan,
        ))

    def m(oid: str, force_color: bool = False) -> str:
        return _mention_for(layout, oid, rng, force_color)

    if category in ("pickup&deliver", "clean&deliver", "fill&deliver"):
        target, recv = roles["target"], roles["receptacle"]
        spec("goto_object", target, {"object": m(target)}, (("approach", target),))
        spec("pickup", target, {"object": m(target)}, (("manip", "pickup", target),))
        if category in ("clean&deliver", "fill&deliver"):
            sink = roles["sink"]
            verb = "clean" if category == "clean&deliver" else "fill"
            nav_to(sink)
            spec(verb, sink, {"object": m(target)}, (
                ("approach", sink),
                ("ensure_on", sink),
                ("manip", "place", sink),
                ("manip", verb, target),
                ("manip", "pickup", target),
            ))
        spec("place", recv, {"receptacle": m(recv), "object": m(target)},
             (("approach", recv), ("manip", "place", recv)))
        return out
    if category == "pourContainer":
        source, target = roles["source"], roles["target"]
        spec("goto_object", source, {"object": m(source)}, (("approach", source),))
        spec("pickup", source, {"object": m(source)}, (("manip", "pickup", source),))
        spec("pour", target, {"target": m(target), "object": m(source)},
             (("approach", target), ("manip", "pour", target)))
        return out
    if category == "insertInDevice":
        item, device = roles["item"], roles["device"]
        spec("pickup", item, {"object": m(item)},
             (("approach", item), ("manip", "pickup", item)))
        spec("place", device, {"receptacle": m(device), "object": m(item)},
             (("approach", device), ("ensure_open", device), ("manip", "place", device)))
        return out
    verb = {"breakObject": "break", "toggleDevice": "toggle", "scanObject": "scan"}[category]
    target = roles["target"]
    spec(verb, target, {"object": m(target)},
         (("approach", target), ("manip", verb, target)))
    return out
