"""A privileged instruction-driven policy with oracle routing and grounding.

It follows the exact decision loop of the model agent but answers the three
tasks from ground truth: routing counts visible referent matches, grounding
picks the matching region (honoring a color named in a clarification answer),
and execution scripts the obvious action for the detected verb. Used as a
deterministic fixture for the service, the console, and tests.
"""

from __future__ import annotations

import random
from typing import Optional

from ..grammar import CRPrediction
from ..training.datasets import FrameData
from ..world import ActionCommand, NavigationKind, ObjectRef
from ..world.catalog import COLORS, OBJECT_CLASSES
from ..world.sim import INTERACTION_RADIUS
from .referents import matching_regions
from .runtime import ExecutedAction, InstructionOutcome, InstructionStatus, ModelAgent, QA
from .session import FrameRecord, Session, phrase_to_command

VERB_KEYWORDS: dict[str, tuple[str, ...]] = {
    "pickup": ("pick", "grab", "take", "get", "lift"),
    "place": ("put", "place", "set", "leave"),
    "open": ("open", "pull"),
    "close": ("close", "shut"),
    "toggle": ("toggle", "turn", "switch", "power"),
    "fill": ("fill",),
    "clean": ("clean", "wash", "rinse"),
    "pour": ("pour", "empty", "tip"),
    "break": ("break", "smash", "shatter"),
    "scan": ("scan", "inspect"),
    "goto": ("go", "head", "walk", "move", "approach"),
}
SEARCH_KEYWORDS = ("find", "look for", "search", "locate", "see if")


def detect_verb(instruction: str) -> tuple[str, bool]:
    """(verb, is_search) from instruction keywords."""
    text = instruction.lower()
    for keyword in SEARCH_KEYWORDS:
        if keyword in text:
            return "goto", True
    first_words = text.split()
    for verb, keywords in VERB_KEYWORDS.items():
        for keyword in keywords:
            if keyword in first_words[:3]:
                return verb, False
    return "goto", False


def detect_referent(instruction: str) -> Optional[str]:
    """Longest catalog class mentioned, with an optional color qualifier."""
    text = instruction.lower()
    best: Optional[tuple[int, str]] = None
    for cls in OBJECT_CLASSES:
        idx = text.find(cls)
        if idx < 0:
            continue
        if best is None or len(cls) > len(best[1]):
            best = (idx, cls)
    if best is None:
        return None
    idx, cls = best
    prefix = text[:idx].rstrip()
    for color in COLORS:
        if prefix.endswith(color):
            return f"{color} {cls}"
    return cls


class OraclePolicy(ModelAgent):
    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)
        self.max_action_len = 24

    # -- oracle task answers ------------------------------------------------------

    def route(self, session: Session, instruction: str, qa: Optional[QA]) -> CRPrediction:
        from ..data.oracle import oracle_cr

        verb, is_search = detect_verb(instruction)
        mention = detect_referent(instruction)
        if mention is None and verb == "goto":
            return oracle_cr(session.current_frame().frame_data, None, is_search=False)
        return oracle_cr(session.current_frame().frame_data, mention or "nothing", is_search)

    def ground(self, session: Session, object_name: str, frame: FrameRecord) -> Optional[int]:
        region = self._pick_region(frame.frame_data, object_name, qa=None)
        if region is not None and region.token in frame.token_to_object:
            return region.token
        return None

    def _pick_region(self, frame: FrameData, object_name: str, qa: Optional[QA]):
        matches = matching_regions(frame, object_name)
        if not matches:
            return None
        if qa is not None and len(matches) > 1:
            answer = qa[1].lower()
            by_color = [r for r in matches if r.color in answer]
            if by_color:
                matches = by_color
        return max(matches, key=lambda r: (r.bbox[2] - r.bbox[0]) * (r.bbox[3] - r.bbox[1]))

    # -- scripted execution --------------------------------------------------------

    def execute(self, session: Session, instruction: str, qa: Optional[QA],
                outcome: InstructionOutcome) -> None:
        import math

        verb, _ = detect_verb(instruction)
        mention = detect_referent(instruction)
        if mention is None:
            room = next((r.name for r in session.world.rooms
                         if r.name in instruction.lower()), None)
            if room is None:
                outcome.status = InstructionStatus.FAILED
                outcome.error = "no referent or room in instruction"
                return
            cmd = ActionCommand(NavigationKind.GOTO, target=room)
            result, _ = session.execute(cmd)
            outcome.actions.append(ExecutedAction(cmd.to_json(), result.success))
            return

        frame = None
        region = None
        for candidate in reversed(session.frames[-4:]):
            found = self._pick_region(candidate.frame_data, mention, qa)
            if found is not None:
                frame, region = candidate, found
                break
        if region is None:
            outcome.status = InstructionStatus.FAILED
            outcome.error = f"referent {mention!r} not visible"
            return
        from ..grammar.actions import ActionPhrase

        object_id = frame.token_to_object[region.token]
        obj = session.world.objects[object_id]
        if obj.state.position is not None and (
            math.dist(session.world.agent.position, obj.state.position) >= INTERACTION_RADIUS * 0.95
        ):
            cmd = ActionCommand(NavigationKind.GOTO, ref=ObjectRef(frame.frame_id, region.token))
            result, frame = session.execute(cmd)
            outcome.actions.append(ExecutedAction(cmd.to_json(), result.success, result.object_id))
            region = next((r for r in frame.frame_data.regions if r.object_id == object_id), None)
            if region is None:
                outcome.status = InstructionStatus.FAILED
                outcome.error = "target lost after approach"
                return
        if verb == "goto":
            outcome.target_object_id = object_id
            return
        phrase = ActionPhrase(verb, object_name=mention, frame=frame.frame_id, visual=region.token)
        cmd = phrase_to_command(phrase)
        result, _ = session.execute(cmd)
        outcome.actions.append(ExecutedAction(cmd.to_json(), result.success, result.object_id))
        outcome.target_object_id = result.object_id or object_id
        if not result.success:
            outcome.status = InstructionStatus.FAILED
            outcome.error = f"precondition failed: {result.to_json()}"
