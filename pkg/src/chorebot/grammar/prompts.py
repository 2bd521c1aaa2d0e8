"""Task prompt templates and seeded prompt sampling."""

from __future__ import annotations

import random
import re

TASK_IDS = ("MLM", "ITM", "Caption", "DenseCaption", "VG", "VQA", "Relation", "AE", "CR")

PROMPT_TEMPLATES: dict[str, tuple[str, ...]] = {
    "MLM": (
        "Denoise: {caption}",
        "Denoise the statement: {caption}",
        "Denoise the description: {caption}",
        "Reconstruct: {caption}",
        "Reconstruct the description: {caption}",
        "Reconstruct the statement: {caption}",
    ),
    "ITM": (
        "Assess the statement: {statement}",
        "Assess the description: {statement}",
        "Evaluate the statement: {statement}",
        "Evaluate the description: {statement}",
    ),
    "Caption": (
        "Caption this",
        "Caption the image",
        "Caption this image",
        "Describe this",
        "Describe the image",
        "Describe this image",
    ),
    "DenseCaption": (
        "Caption {region}",
        "Caption object {region}",
        "Describe {region}",
        "Describe object {region}",
    ),
    "VG": (
        "Find the object: {caption}",
        "Locate the object: {caption}",
        "Pick the object: {caption}",
        "Select the object: {caption}",
    ),
    "VQA": (
        "Answer: {question}",
        "Answer the question: {question}",
        "What is the answer to: {question}",
        "What is the answer to the question: {question}",
    ),
    "Relation": (
        "Explain the relationship between: {subject} and {object}",
        "Explain how {subject} relates to {object}",
        "Describe the relationship between {subject} and {object}",
        "Describe how {subject} relates to {object}",
    ),
    "AE": (
        "Act according to the instruction: {instruction}",
        "Execute the instruction: {instruction}",
        "Follow the instruction: {instruction}",
    ),
    "CR": (
        "Predict the system act: {instruction}",
    ),
}

_SLOT_RE = re.compile(r"\{(\w+)\}")


class PromptError(ValueError):
    pass


def build_prompt(task: str, fields: dict[str, str], rng: random.Random | int | None = None) -> str:
    """Sample one of the task's template variants (uniform, seeded) and fill it."""
    templates = PROMPT_TEMPLATES.get(task)
    if templates is None:
        raise PromptError(f"unknown task id {task!r}")
    if rng is None:
        rng = random.Random(0)
    elif isinstance(rng, int):
        rng = random.Random(rng)
    template = templates[rng.randrange(len(templates))] if len(templates) > 1 else templates[0]
    needed = set(_SLOT_RE.findall(template))
    missing = needed - set(fields)
    if missing:
        raise PromptError(f"missing slots for task {task!r}: {sorted(missing)}")
    return template.format(**{k: fields[k] for k in needed})
