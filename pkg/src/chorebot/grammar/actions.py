"""The flat action language: serialization and total parsing.

Decisions travel between the model and the runtime as plain token strings:
action phrases are period-delimited and a complete sequence ends with the
stop sentinel; routing decisions are two sentinels plus an optional object
name. Parsers never abort: malformed input raises a structured syntax error
carrying the byte offset.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .sentinels import (
    ACT,
    COMMANDER,
    FOLLOWER,
    MATCH_TOKENS,
    MULTIPLE_MATCHES,
    NO_MATCH,
    ONE_MATCH,
    SEARCH,
    STOP,
    frame_token,
    parse_frame_token,
    parse_visual_token,
    visual_token,
)

MANIPULATION_VERBS = ("pickup", "place", "open", "close", "toggle", "fill", "clean", "pour", "break", "scan")
NAVIGATION_VERBS = ("goto", "move forward", "move backward", "rotate left", "rotate right", "look around")
ALL_VERBS = MANIPULATION_VERBS + NAVIGATION_VERBS
PRIMITIVE_VERBS = ("move forward", "move backward", "rotate left", "rotate right", "look around")


@dataclass(frozen=True)
class ActionPhrase:
    verb: str
    object_name: Optional[str] = None
    frame: Optional[int] = None
    visual: Optional[int] = None

    def __post_init__(self):
        if self.verb not in ALL_VERBS:
            raise ValueError(f"unknown verb {self.verb!r}")
        if self.verb in MANIPULATION_VERBS and (self.frame is None or self.visual is None):
            raise ValueError(f"manipulation phrase {self.verb!r} needs a frame and visual token")
        if (self.frame is None) != (self.visual is None):
            raise ValueError("frame and visual tokens come in pairs")
        if self.verb in PRIMITIVE_VERBS and (self.object_name or self.frame):
            raise ValueError(f"primitive move {self.verb!r} takes no arguments")
        if self.verb == "goto" and not self.object_name:
            raise ValueError("goto needs a target name")
        if self.verb in MANIPULATION_VERBS and not self.object_name:
            raise ValueError("manipulation phrase needs an object name")

    def render(self) -> str:
        parts = [self.verb]
        if self.object_name:
            parts.append(self.object_name)
        if self.frame is not None:
            parts.append(frame_token(self.frame))
            parts.append(visual_token(self.visual))
        return " ".join(parts)


class ActionErrorKind(str, Enum):
    UNKNOWN_VERB = "UnknownVerb"
    MISSING_OBJECT_REF = "MissingObjectRef"
    DANGLING_TOKEN = "DanglingToken"
    TRUNCATED = "Truncated"


class ActionParseError(ValueError):
    def __init__(self, kind: ActionErrorKind, offset: int, message: str):
        self.kind = kind
        self.offset = offset
        super().__init__(f"{kind.value} at byte {offset}: {message}")


def serialize_actions(phrases: list[ActionPhrase], complete: bool = True) -> str:
    """Render phrases as 'phrase . phrase . <stop>'.

    With complete=False the trailing stop sentinel is omitted, which is the
    shape of an in-progress trajectory.
    """
    parts: list[str] = []
    for phrase in phrases:
        parts.append(phrase.render())
        parts.append(".")
    if complete:
        parts.append(STOP)
    return " ".join(parts)


def parse_actions(text: str, require_stop: bool = True) -> tuple[list[ActionPhrase], bool]:
    """Parse a period-delimited action sequence.

    Returns (phrases, complete) where complete means the sequence ended with
    the stop sentinel. With require_stop (the default) an unterminated
    sequence raises Truncated; the agent loop parses partial output with
    require_stop=False.
    """
    tokens = [(m.group(), m.start()) for m in re.finditer(r"\S+", text)]
    phrases: list[ActionPhrase] = []
    current: list[tuple[str, int]] = []
    complete = False
    for word, offset in tokens:
        if complete:
            raise ActionParseError(ActionErrorKind.DANGLING_TOKEN, offset, f"{word!r} after {STOP}")
        if word == STOP:
            if current:
                raise ActionParseError(
                    ActionErrorKind.DANGLING_TOKEN, offset, f"{STOP} inside an unterminated phrase"
                )
            complete = True
        elif word == ".":
            if not current:
                raise ActionParseError(ActionErrorKind.DANGLING_TOKEN, offset, "empty phrase")
            phrases.append(_parse_phrase(current))
            current = []
        else:
            current.append((word, offset))
    if current:
        raise ActionParseError(
            ActionErrorKind.TRUNCATED, len(text), "phrase not terminated by a period"
        )
    if require_stop and not complete:
        raise ActionParseError(ActionErrorKind.TRUNCATED, len(text), f"missing trailing {STOP}")
    return phrases, complete


def _parse_phrase(tokens: list[tuple[str, int]]) -> ActionPhrase:
    words = [w for w, _ in tokens]
    verb = None
    for candidate in sorted(ALL_VERBS, key=len, reverse=True):
        cand_words = candidate.split()
        if words[: len(cand_words)] == cand_words:
            verb = candidate
            rest = tokens[len(cand_words):]
            break
    if verb is None:
        raise ActionParseError(ActionErrorKind.UNKNOWN_VERB, tokens[0][1], f"no verb matches {words[0]!r}")

    frame = visual = None
    if len(rest) >= 2:
        maybe_frame = parse_frame_token(rest[-2][0])
        maybe_visual = parse_visual_token(rest[-1][0])
        if maybe_frame is not None and maybe_visual is not None:
            frame, visual = maybe_frame, maybe_visual
            rest = rest[:-2]

    for word, offset in rest:
        if parse_frame_token(word) is not None or parse_visual_token(word) is not None:
            raise ActionParseError(
                ActionErrorKind.DANGLING_TOKEN, offset, f"stray sentinel {word!r} inside a phrase"
            )

    name = " ".join(w for w, _ in rest) if rest else None
    anchor = tokens[0][1]
    if verb in PRIMITIVE_VERBS:
        if name or frame is not None:
            raise ActionParseError(
                ActionErrorKind.DANGLING_TOKEN, rest[0][1] if rest else anchor,
                f"{verb!r} takes no arguments",
            )
        return ActionPhrase(verb)
    if verb in MANIPULATION_VERBS:
        if frame is None:
            raise ActionParseError(
                ActionErrorKind.MISSING_OBJECT_REF, anchor, f"{verb!r} needs frame and visual tokens"
            )
        if not name:
            raise ActionParseError(ActionErrorKind.MISSING_OBJECT_REF, anchor, f"{verb!r} needs an object name")
        return ActionPhrase(verb, object_name=name, frame=frame, visual=visual)
    # goto
    if not name:
        raise ActionParseError(ActionErrorKind.MISSING_OBJECT_REF, anchor, "goto needs a target name")
    return ActionPhrase(verb, object_name=name, frame=frame, visual=visual)


# -- contextual routing -------------------------------------------------------


class Route(str, Enum):
    ACT = "act"
    SEARCH = "search"


class Match(str, Enum):
    NO_MATCH = "no match"
    ONE_MATCH = "one match"
    MULTIPLE_MATCHES = "multiple matches"


_ROUTE_TOKEN = {Route.ACT: ACT, Route.SEARCH: SEARCH}
_MATCH_TOKEN = {Match.NO_MATCH: NO_MATCH, Match.ONE_MATCH: ONE_MATCH, Match.MULTIPLE_MATCHES: MULTIPLE_MATCHES}


@dataclass(frozen=True)
class CRPrediction:
    route: Route
    match: Match
    object_name: Optional[str] = None

    def render(self) -> str:
        text = _ROUTE_TOKEN[self.route] + _MATCH_TOKEN[self.match]
        if self.object_name:
            text += f" {self.object_name}"
        return text


class CRErrorKind(str, Enum):
    BAD_ROUTE = "BadRoute"
    BAD_MATCH = "BadMatch"
    TRAILING_GARBAGE = "TrailingGarbage"


class CRParseError(ValueError):
    def __init__(self, kind: CRErrorKind, offset: int, message: str):
        self.kind = kind
        self.offset = offset
        super().__init__(f"{kind.value} at byte {offset}: {message}")


_SENTINEL_RE = re.compile(r"<[^<>]*>")


def parse_cr(text: str) -> CRPrediction:
    """Parse a routing decision: route sentinel, match sentinel, optional name."""
    pos = len(text) - len(text.lstrip())
    route = None
    for token, value in ((ACT, Route.ACT), (SEARCH, Route.SEARCH)):
        if text.startswith(token, pos):
            route, pos = value, pos + len(token)
            break
    if route is None:
        raise CRParseError(CRErrorKind.BAD_ROUTE, pos, f"expected {ACT} or {SEARCH}")

    while pos < len(text) and text[pos].isspace():
        pos += 1
    match = None
    for token in MATCH_TOKENS:
        if text.startswith(token, pos):
            match, pos = Match(token[1:-1]), pos + len(token)
            break
    if match is None:
        raise CRParseError(CRErrorKind.BAD_MATCH, pos, f"expected one of {MATCH_TOKENS}")

    rest = text[pos:].strip()
    stray = _SENTINEL_RE.search(rest)
    if stray is not None:
        raise CRParseError(
            CRErrorKind.TRAILING_GARBAGE, pos + text[pos:].find(stray.group()),
            f"unexpected token {stray.group()!r} after the object name",
        )
    return CRPrediction(route=route, match=match, object_name=rest or None)


# -- dialog formatting ----------------------------------------------------------


def format_dialog(instruction: str, qa: Optional[tuple[str, str]] = None) -> str:
    """Prefix each dialog turn with its role sentinel.

    The clarification question is attributed to the commander and the answer
    to the follower relay, matching who speaks in an interactive session.
    """
    text = f"{FOLLOWER} {instruction}"
    if qa is not None:
        question, answer = qa
        text += f" {COMMANDER} {question} {FOLLOWER} {answer}"
    return text


_ROLE_RE = re.compile(f"({re.escape(FOLLOWER)}|{re.escape(COMMANDER)})")


def parse_dialog(text: str) -> list[tuple[str, str]]:
    """Inverse of format_dialog: list of (role token, turn text)."""
    parts = _ROLE_RE.split(text)
    turns: list[tuple[str, str]] = []
    role = None
    for part in parts:
        if part in (FOLLOWER, COMMANDER):
            role = part
        elif role is not None and part.strip():
            turns.append((role, part.strip()))
    return turns


# -- visual token assignment --------------------------------------------------


def assign_visual_tokens(
    num_detections: int,
    rng: random.Random | int | None = None,
    shuffle: bool = False,
) -> dict[int, int]:
    """Map detection index -> visual token id, bijectively into [1, 36].

    Without shuffling the assignment follows detection order (nearest first).
    With shuffling the ids are a seeded random draw, which forces models to
    read identities from the input instead of memorizing positions.
    """
    from .sentinels import MAX_VISUAL_TOKENS

    if num_detections > MAX_VISUAL_TOKENS:
        raise ValueError(f"{num_detections} detections exceed the cap of {MAX_VISUAL_TOKENS}")
    if not shuffle:
        return {i: i + 1 for i in range(num_detections)}
    if rng is None or isinstance(rng, int):
        rng = random.Random(rng)
    ids = rng.sample(range(1, MAX_VISUAL_TOKENS + 1), num_detections)
    return {i: ids[i] for i in range(num_detections)}
