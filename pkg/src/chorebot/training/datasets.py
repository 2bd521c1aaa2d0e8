"""Training sample containers and JSONL persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from ..grammar.prompts import TASK_IDS

STATE_BIT_FIELDS = ("isOpen", "isOn", "isDirty", "isFilled", "isBroken", "isChilled", "isHot")


@dataclass(frozen=True)
class RegionData:
    class_name: str
    color: str
    state_bits: tuple[int, ...]  # seven flags, order of STATE_BIT_FIELDS
    bbox: tuple[float, float, float, float]
    token: int  # visual token id in [1, 36]
    object_id: str = ""

    def to_json(self) -> dict:
        return {
            "class": self.class_name,
            "color": self.color,
            "state": list(self.state_bits),
            "bbox": list(self.bbox),
            "token": self.token,
            "objectId": self.object_id,
        }

    @staticmethod
    def from_json(doc: dict) -> "RegionData":
        return RegionData(
            class_name=doc["class"],
            color=doc["color"],
            state_bits=tuple(doc["state"]),
            bbox=tuple(doc["bbox"]),
            token=doc["token"],
            object_id=doc.get("objectId", ""),
        )


@dataclass(frozen=True)
class FrameData:
    frame_id: int  # frame sentinel index in [1, 64]
    room: str
    regions: tuple[RegionData, ...]

    def to_json(self) -> dict:
        return {"id": self.frame_id, "room": self.room, "regions": [r.to_json() for r in self.regions]}

    @staticmethod
    def from_json(doc: dict) -> "FrameData":
        return FrameData(doc["id"], doc["room"], tuple(RegionData.from_json(r) for r in doc["regions"]))


@dataclass(frozen=True)
class TaskSample:
    task_id: str
    text: str
    frames: tuple[FrameData, ...]
    target: str
    meta: Optional[dict] = None

    def __post_init__(self):
        if self.task_id not in TASK_IDS:
            raise ValueError(f"unknown task id {self.task_id!r}")
        if not self.target:
            raise ValueError("sample target must be non-empty")

    def to_json(self) -> dict:
        doc = {
            "taskId": self.task_id,
            "text": self.text,
            "frames": [f.to_json() for f in self.frames],
            "target": self.target,
        }
        if self.meta:
            doc["meta"] = self.meta
        return doc

    @staticmethod
    def from_json(doc: dict) -> "TaskSample":
        return TaskSample(
            task_id=doc["taskId"],
            text=doc["text"],
            frames=tuple(FrameData.from_json(f) for f in doc["frames"]),
            target=doc["target"],
            meta=doc.get("meta"),
        )


@dataclass
class TaskDataset:
    task_id: str
    samples: list[TaskSample] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.samples)


def save_samples(samples: Iterable[TaskSample], path: str | Path) -> None:
    with open(path, "w") as fh:
        for sample in samples:
            fh.write(json.dumps(sample.to_json()) + "\n")


def load_samples(path: str | Path) -> list[TaskSample]:
    samples = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                samples.append(TaskSample.from_json(json.loads(line)))
    return samples


def group_by_task(samples: Iterable[TaskSample]) -> dict[str, TaskDataset]:
    grouped: dict[str, TaskDataset] = {}
    for sample in samples:
        grouped.setdefault(sample.task_id, TaskDataset(sample.task_id)).samples.append(sample)
    return grouped
