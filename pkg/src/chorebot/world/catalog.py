"""Object class catalog: affordances, colors, and nominal sizes.

The catalog is the closed vocabulary of things the simulator can spawn.
Every class maps to a fixed affordance subset; colors are cosmetic and used
for referent disambiguation.
"""

from __future__ import annotations

from enum import Enum


class Affordance(str, Enum):
    PICKUPABLE = "pickupable"
    OPENABLE = "openable"
    BREAKABLE = "breakable"
    RECEPTACLE = "receptacle"
    TOGGLEABLE = "toggleable"
    POWERABLE = "powerable"
    DIRTYABLE = "dirtyable"
    HEATABLE = "heatable"
    EATABLE = "eatable"
    CHILLABLE = "chillable"
    FILLABLE = "fillable"
    COOKABLE = "cookable"
    DECOR = "decor"
    INFECTABLE = "infectable"


A = Affordance

# class name -> (affordance set, nominal physical size in meters)
# Size drives the projected bbox area: bigger and nearer objects look larger.
OBJECT_CLASSES: dict[str, tuple[frozenset[Affordance], float]] = {
    "mug": (frozenset({A.PICKUPABLE, A.FILLABLE, A.DIRTYABLE, A.BREAKABLE, A.CHILLABLE}), 0.12),
    "plate": (frozenset({A.PICKUPABLE, A.DIRTYABLE, A.BREAKABLE}), 0.25),
    "bowl": (frozenset({A.PICKUPABLE, A.FILLABLE, A.DIRTYABLE, A.BREAKABLE, A.CHILLABLE}), 0.2),
    "pot": (frozenset({A.PICKUPABLE, A.FILLABLE, A.DIRTYABLE, A.HEATABLE, A.COOKABLE}), 0.3),
    "apple": (frozenset({A.PICKUPABLE, A.EATABLE, A.COOKABLE, A.CHILLABLE}), 0.08),
    "banana": (frozenset({A.PICKUPABLE, A.EATABLE, A.CHILLABLE}), 0.18),
    "cake": (frozenset({A.PICKUPABLE, A.EATABLE, A.CHILLABLE, A.HEATABLE}), 0.25),
    "cereal box": (frozenset({A.PICKUPABLE, A.FILLABLE}), 0.3),
    "milk carton": (frozenset({A.PICKUPABLE, A.FILLABLE, A.CHILLABLE}), 0.22),
    "book": (frozenset({A.PICKUPABLE}), 0.22),
    "cartridge": (frozenset({A.PICKUPABLE}), 0.1),
    "floppy disk": (frozenset({A.PICKUPABLE, A.INFECTABLE}), 0.09),
    "fork": (frozenset({A.PICKUPABLE, A.DIRTYABLE}), 0.15),
    "knife": (frozenset({A.PICKUPABLE, A.DIRTYABLE}), 0.2),
    "spoon": (frozenset({A.PICKUPABLE, A.DIRTYABLE}), 0.15),
    "vase": (frozenset({A.PICKUPABLE, A.BREAKABLE, A.FILLABLE, A.DECOR}), 0.3),
    "trophy": (frozenset({A.PICKUPABLE, A.DECOR}), 0.3),
    "clock": (frozenset({A.PICKUPABLE, A.BREAKABLE, A.DECOR}), 0.25),
    "plant": (frozenset({A.PICKUPABLE, A.DECOR}), 0.4),
    "radio": (frozenset({A.PICKUPABLE, A.TOGGLEABLE, A.POWERABLE}), 0.3),
    "lamp": (frozenset({A.TOGGLEABLE, A.POWERABLE, A.BREAKABLE}), 0.5),
    "computer": (frozenset({A.TOGGLEABLE, A.POWERABLE, A.BREAKABLE}), 0.5),
    "television": (frozenset({A.TOGGLEABLE, A.POWERABLE, A.BREAKABLE}), 0.9),
    "laser": (frozenset({A.PICKUPABLE, A.TOGGLEABLE, A.POWERABLE}), 0.3),
    "fridge": (frozenset({A.OPENABLE, A.RECEPTACLE, A.POWERABLE}), 1.7),
    "cabinet": (frozenset({A.OPENABLE, A.RECEPTACLE}), 1.0),
    "box": (frozenset({A.OPENABLE, A.RECEPTACLE, A.PICKUPABLE}), 0.45),
    "printer": (frozenset({A.OPENABLE, A.RECEPTACLE, A.TOGGLEABLE, A.POWERABLE}), 0.5),
    "sink": (frozenset({A.RECEPTACLE, A.TOGGLEABLE}), 0.8),
    "coffee maker": (frozenset({A.RECEPTACLE, A.TOGGLEABLE, A.POWERABLE}), 0.35),
    "vending machine": (frozenset({A.TOGGLEABLE, A.POWERABLE, A.BREAKABLE, A.RECEPTACLE}), 1.8),
    "desk": (frozenset({A.RECEPTACLE}), 1.4),
    "table": (frozenset({A.RECEPTACLE}), 1.5),
    "shelf": (frozenset({A.RECEPTACLE}), 1.2),
    "counter": (frozenset({A.RECEPTACLE}), 1.5),
    "sofa": (frozenset({A.RECEPTACLE, A.DECOR}), 2.0),
    "bin": (frozenset({A.RECEPTACLE}), 0.5),
    "window": (frozenset({A.BREAKABLE, A.DECOR}), 1.2),
    "mirror": (frozenset({A.BREAKABLE, A.DECOR}), 0.9),
    "poster": (frozenset({A.DECOR}), 0.8),
}

COLORS = ["red", "green", "blue", "yellow", "white", "black", "gray", "brown", "purple", "orange"]

ROOM_NAMES = ["kitchen", "office", "lounge", "lab", "bedroom", "hallway", "workshop", "studio"]


def affordances_of(class_name: str) -> frozenset[Affordance]:
    try:
        return OBJECT_CLASSES[class_name][0]
    except KeyError:
        raise KeyError(f"unknown object class: {class_name!r}") from None


def nominal_size(class_name: str) -> float:
    return OBJECT_CLASSES[class_name][1]


def classes_with(*required: Affordance) -> list[str]:
    """All class names whose affordance set contains every required flag."""
    need = set(required)
    return [c for c, (aff, _) in OBJECT_CLASSES.items() if need <= aff]
