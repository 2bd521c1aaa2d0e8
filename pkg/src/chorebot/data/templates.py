"""Static instruction paraphrase bank.

Slots: {object} (referent phrase, possibly color-qualified), {room},
{receptacle}, {target}. Every action keeps at least three paraphrases so
instruction text stays varied without any external generation loop.
"""

from __future__ import annotations

import random
import re

TEMPLATE_BANK: dict[str, tuple[str, ...]] = {
    "pickup": (
        "pick up the {object}",
        "grab the {object}",
        "take the {object}",
        "get the {object}",
        "lift the {object}",
    ),
    "place": (
        "put it on the {receptacle}",
        "place it on the {receptacle}",
        "set it down on the {receptacle}",
        "leave it on the {receptacle}",
        "put the {object} on the {receptacle}",
    ),
    "open": (
        "open the {object}",
        "pull the {object} open",
        "open up the {object}",
    ),
    "close": (
        "close the {object}",
        "shut the {object}",
        "push the {object} closed",
    ),
    "toggle": (
        "toggle the {object}",
        "turn on the {object}",
        "switch on the {object}",
        "power up the {object}",
    ),
    "fill": (
        "fill the {object}",
        "fill up the {object}",
        "fill the {object} with water",
    ),
    "clean": (
        "clean the {object}",
        "wash the {object}",
        "rinse the {object}",
        "clean the {object} in the sink",
    ),
    "pour": (
        "pour it into the {target}",
        "empty it into the {target}",
        "pour the {object} into the {target}",
        "tip the {object} into the {target}",
    ),
    "break": (
        "break the {object}",
        "smash the {object}",
        "shatter the {object}",
    ),
    "scan": (
        "scan the {object}",
        "run a scan on the {object}",
        "inspect the {object}",
    ),
    "goto_object": (
        "go to the {object}",
        "head towards the {object}",
        "walk over to the {object}",
        "move to the {object}",
        "approach the {object}",
    ),
    "goto_room": (
        "go to the {room}",
        "head to the {room}",
        "walk into the {room}",
    ),
    "search": (
        "find the {object}",
        "look for the {object}",
        "search for the {object}",
        "locate the {object}",
        "see if you can find the {object}",
    ),
}

_SLOT_RE = re.compile(r"\{(\w+)\}")


class TemplateError(ValueError):
    pass


def paraphrase(action: str, slots: dict[str, str], rng: random.Random | int = 0) -> str:
    """Uniform seeded template choice, slots substituted, lowercased."""
    templates = TEMPLATE_BANK.get(action)
    if templates is None:
        raise TemplateError(f"no templates for action {action!r}")
    if isinstance(rng, int):
        rng = random.Random(rng)
    candidates = [t for t in templates if set(_SLOT_RE.findall(t)) <= set(slots)]
    if not candidates:
        missing = {s for t in templates for s in _SLOT_RE.findall(t)} - set(slots)
        raise TemplateError(f"missing slots for {action!r}: {sorted(missing)}")
    template = candidates[rng.randrange(len(candidates))]
    return template.format(**slots).lower()
