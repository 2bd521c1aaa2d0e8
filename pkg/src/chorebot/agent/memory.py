"""Object memory for the search routine.

One entry per (room, class label). Re-observations keep the larger bbox area
(a proxy for proximity, since there is no depth); ties keep the existing
entry, so areas never decrease.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ObjectMemoryEntry:
    label: str
    area: float
    viewpoint: str
    room: str


class ObjectMemory:
    def __init__(self):
        self._entries: dict[tuple[str, str], ObjectMemoryEntry] = {}

    def update(self, room: str, label: str, area: float, viewpoint: str) -> None:
        key = (room, label)
        existing = self._entries.get(key)
        if existing is None or area > existing.area:
            self._entries[key] = ObjectMemoryEntry(label=label, area=area, viewpoint=viewpoint, room=room)

    def lookup(self, room: str, label: str) -> ObjectMemoryEntry | None:
        return self._entries.get((room, label))

    def entries(self) -> list[ObjectMemoryEntry]:
        return list(self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)
