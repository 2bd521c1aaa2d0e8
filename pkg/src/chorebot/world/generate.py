"""Randomized layout generation.

Rooms come from per-room-type furniture templates; object positions, colors,
viewpoints, and the agent spawn are randomized. Viewpoint placement is
rejection-sampled so the radius-4 greedy coverage plan never needs more than
two viewpoints, whatever position the search starts from.
"""

from __future__ import annotations

import random

from ..coverage import COVERAGE_RADIUS, disk_adjacency, greedy_max_coverage
from .catalog import COLORS

ROOM_TEMPLATES: dict[str, tuple[list[str], list[str]]] = {
    # room type -> (fixtures always present, optional extras)
    "kitchen": (
        ["sink", "fridge", "counter", "table"],
        ["mug", "plate", "bowl", "apple", "banana", "cereal box", "milk carton", "pot", "cake", "bin", "coffee maker"],
    ),
    "office": (
        ["desk", "cabinet", "printer", "lamp"],
        ["book", "cartridge", "computer", "clock", "floppy disk", "trophy", "radio", "poster", "vase"],
    ),
    "lounge": (
        ["sofa", "table", "television"],
        ["vase", "plant", "book", "clock", "radio", "mirror", "window", "trophy"],
    ),
    "lab": (
        ["counter", "cabinet", "vending machine"],
        ["laser", "floppy disk", "box", "computer", "mirror", "window"],
    ),
    "bedroom": (
        ["shelf", "lamp", "table"],
        ["book", "clock", "plant", "mirror", "vase", "poster"],
    ),
    "workshop": (
        ["table", "box", "bin"],
        ["knife", "fork", "spoon", "pot", "window", "laser"],
    ),
}

ROOM_GAP = 1.0
WALL_MARGIN = 0.6
MIN_SEPARATION = 0.7


def _sample_positions(rng: random.Random, bounds, count: int) -> list[tuple[float, float]]:
    x1, y1, x2, y2 = bounds
    positions: list[tuple[float, float]] = []
    attempts = 0
    while len(positions) < count and attempts < 600:
        attempts += 1
        pos = (
            round(rng.uniform(x1 + WALL_MARGIN, x2 - WALL_MARGIN), 2),
            round(rng.uniform(y1 + WALL_MARGIN, y2 - WALL_MARGIN), 2),
        )
        if all((pos[0] - p[0]) ** 2 + (pos[1] - p[1]) ** 2 >= MIN_SEPARATION**2 for p in positions):
            positions.append(pos)
    while len(positions) < count:  # crowded room: give up on separation
        positions.append((round(rng.uniform(x1 + WALL_MARGIN, x2 - WALL_MARGIN), 2),
                          round(rng.uniform(y1 + WALL_MARGIN, y2 - WALL_MARGIN), 2)))
    return positions


def _viewpoints_need_at_most_two(points: list[tuple[float, float]], bounds) -> bool:
    """Plans from any start (each viewpoint or the room center) select <= 2."""
    x1, y1, x2, y2 = bounds
    center = ((x1 + x2) / 2, (y1 + y2) / 2)
    for origin in [center] + points:
        nodes = [origin] + points
        adj = disk_adjacency(nodes, COVERAGE_RADIUS)
        chosen = greedy_max_coverage(adj, preselected=[0], selectable=range(1, len(nodes)))
        if len(chosen) > 2:
            return False
    return True


def generate_layout(
    rng: random.Random | int,
    room_types: list[str] | None = None,
    extra_objects: int = 4,
    name: str | None = None,
) -> dict:
    """Build a layout document. Deterministic for a given seed."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    if room_types is None:
        room_types = rng.sample(sorted(ROOM_TEMPLATES), k=2)

    rooms = []
    objects = []
    class_counter: dict[str, int] = {}
    x_offset = 0.0
    for room_type in room_types:
        width = round(rng.uniform(5.0, 9.0), 1)
        height = round(rng.uniform(4.0, 7.0), 1)
        bounds = (x_offset, 0.0, x_offset + width, height)
        x_offset += width + ROOM_GAP

        for _ in range(40):
            count = rng.randint(2, 4)
            points = _sample_positions(rng, bounds, count)
            if _viewpoints_need_at_most_two(points, bounds):
                break
        viewpoints = [
            {"id": f"{room_type}:vp{i}", "position": list(p)} for i, p in enumerate(points)
        ]
        rooms.append({"name": room_type, "bounds": list(bounds), "viewpoints": viewpoints})

        fixtures, extras = ROOM_TEMPLATES[room_type]
        classes = list(fixtures) + rng.sample(extras, k=min(extra_objects, len(extras)))
        positions = _sample_positions(rng, bounds, len(classes))
        for class_name, pos in zip(classes, positions):
            index = class_counter.get(class_name, 0)
            class_counter[class_name] = index + 1
            objects.append(
                {
                    "id": f"{class_name.replace(' ', '_')}_{index}",
                    "class": class_name,
                    "color": rng.choice(COLORS),
                    "position": list(pos),
                    "room": room_type,
                }
            )

    spawn_room = rooms[0]
    x1, y1, x2, y2 = spawn_room["bounds"]
    agent = {
        "room": spawn_room["name"],
        "position": [round(rng.uniform(x1 + WALL_MARGIN, x2 - WALL_MARGIN), 2),
                     round(rng.uniform(y1 + WALL_MARGIN, y2 - WALL_MARGIN), 2)],
        "heading": rng.choice([0, 90, 180, 270]),
    }
    return {
        "schemaVersion": 1,
        "name": name or f"layout-{'-'.join(room_types)}",
        "rooms": rooms,
        "objects": objects,
        "agent": agent,
    }
