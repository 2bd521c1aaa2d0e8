"""Model input/target formats shared by training data generation and the
live agent, so the two can never drift apart."""

from __future__ import annotations

import random
from typing import Optional, Sequence

from ..grammar import CRPrediction, build_prompt, format_dialog
from ..training.datasets import FrameData, TaskSample

QA = tuple[str, str]


def cr_input(instruction: str, qa: Optional[QA], rng: random.Random | int = 0) -> str:
    return build_prompt("CR", {"instruction": format_dialog(instruction, qa)}, rng)


def ae_input(instruction: str, qa: Optional[QA], rng: random.Random | int = 0) -> str:
    return build_prompt("AE", {"instruction": format_dialog(instruction, qa)}, rng)


def vg_input(query: str, rng: random.Random | int = 0) -> str:
    phrase = query if query.startswith("the ") else f"the {query}"
    return build_prompt("VG", {"caption": phrase}, rng)


def cr_sample(frame: FrameData, instruction: str, qa: Optional[QA],
              label: CRPrediction, rng: random.Random | int = 0,
              meta: Optional[dict] = None) -> TaskSample:
    return TaskSample("CR", cr_input(instruction, qa, rng), (frame,), label.render(), meta=meta)


def ae_sample(frames: Sequence[FrameData], instruction: str, qa: Optional[QA],
              target: str, rng: random.Random | int = 0,
              meta: Optional[dict] = None) -> TaskSample:
    return TaskSample("AE", ae_input(instruction, qa, rng), tuple(frames), target, meta=meta)


def vg_sample(frame: FrameData, query: str, target: str, rng: random.Random | int = 0,
              meta: Optional[dict] = None) -> TaskSample:
    return TaskSample("VG", vg_input(query, rng), (frame,), target, meta=meta)
