import pytest

from chorebot.world import load_layout


TWO_ROOM_LAYOUT = {
    "schemaVersion": 1,
    "name": "two-room-fixture",
    "rooms": [
        {
            "name": "kitchen",
            "bounds": [0.0, 0.0, 8.0, 6.0],
            "viewpoints": [
                {"id": "kitchen:vp0", "position": [2.0, 3.0]},
                {"id": "kitchen:vp1", "position": [6.0, 3.0]},
            ],
        },
        {
            "name": "office",
            "bounds": [9.0, 0.0, 16.0, 6.0],
            "viewpoints": [
                {"id": "office:vp0", "position": [12.5, 3.0]},
            ],
        },
    ],
    "objects": [
        {"id": "mug_0", "class": "mug", "color": "red", "position": [4.0, 4.5], "room": "kitchen"},
        {"id": "mug_1", "class": "mug", "color": "green", "position": [5.2, 4.5], "room": "kitchen"},
        {"id": "sink_0", "class": "sink", "color": "white", "position": [7.0, 3.0], "room": "kitchen"},
        {"id": "fridge_0", "class": "fridge", "color": "gray", "position": [1.0, 5.0], "room": "kitchen"},
        {
            "id": "milk_0",
            "class": "milk carton",
            "color": "white",
            "position": [1.0, 5.0],
            "room": "kitchen",
            "state": {"containedIn": "fridge_0"},
        },
        {"id": "desk_0", "class": "desk", "color": "brown", "position": [13.0, 4.0], "room": "office"},
        {"id": "lamp_0", "class": "lamp", "color": "black", "position": [11.0, 2.0], "room": "office"},
        {"id": "plate_0", "class": "plate", "color": "blue", "position": [3.0, 2.0], "room": "kitchen", "state": {"isDirty": True}},
    ],
    "agent": {"room": "kitchen", "position": [4.0, 1.0], "heading": 0},
}


@pytest.fixture
def two_room_world():
    return load_layout(TWO_ROOM_LAYOUT, seed=7)
