"""Referent phrases: parsing '"red mug"-style mentions and matching them
against detections."""

from __future__ import annotations

from typing import Optional

from ..training.datasets import FrameData, RegionData
from ..world.catalog import COLORS, OBJECT_CLASSES

_CLASSES_BY_LENGTH = sorted(OBJECT_CLASSES, key=len, reverse=True)


def split_referent(name: str) -> tuple[Optional[str], str]:
    """'red mug' -> ('red', 'mug'); 'cereal box' -> (None, 'cereal box').

    Unknown class names pass through unchanged so lookups simply miss.
    """
    text = name.strip().lower()
    if text.startswith("the "):
        text = text[4:]
    for cls in _CLASSES_BY_LENGTH:
        if text == cls:
            return None, cls
        if text.endswith(" " + cls):
            prefix = text[: -len(cls) - 1].strip()
            if prefix in COLORS:
                return prefix, cls
            return None, cls
    return None, text


def mention(region_or_class, color: Optional[str] = None, include_color: bool = True) -> str:
    """Render a referent phrase the way instructions mention it."""
    if isinstance(region_or_class, RegionData):
        cls, col = region_or_class.class_name, region_or_class.color
    else:
        cls, col = region_or_class, color
    if include_color and col:
        return f"{col} {cls}"
    return cls


def matching_regions(frame: FrameData, name: str) -> list[RegionData]:
    color, cls = split_referent(name)
    return [
        r for r in frame.regions
        if r.class_name == cls and (color is None or r.color == color)
    ]


def match_count(frame: FrameData, name: str) -> int:
    return len(matching_regions(frame, name))
