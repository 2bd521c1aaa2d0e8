"""Reserved sentinel tokens shared by every task.

Sentinels are atomic in the vocabulary: the tokenizer never splits them and
BPE never merges across them. Frame tokens reference whole observations,
visual tokens reference detections within a frame.
"""

from __future__ import annotations

MAX_FRAME_TOKENS = 64
MAX_VISUAL_TOKENS = 36

ACT = "<act>"
SEARCH = "<search>"
NO_MATCH = "<no match>"
ONE_MATCH = "<one match>"
MULTIPLE_MATCHES = "<multiple matches>"
FOLLOWER = "<follower>"
COMMANDER = "<commander>"
STOP = "<stop>"
MASK = "<MASK>"
PAD = "<pad>"
BOS = "<bos>"
EOS = "<eos>"

ROUTE_TOKENS = (ACT, SEARCH)
MATCH_TOKENS = (NO_MATCH, ONE_MATCH, MULTIPLE_MATCHES)
CONTROL_TOKENS = (PAD, BOS, EOS, STOP, MASK)
DIALOG_TOKENS = (FOLLOWER, COMMANDER)


def frame_token(i: int) -> str:
    if not 1 <= i <= MAX_FRAME_TOKENS:
        raise ValueError(f"frame token index {i} outside [1, {MAX_FRAME_TOKENS}]")
    return f"<frame_token_{i}>"


def visual_token(j: int) -> str:
    if not 1 <= j <= MAX_VISUAL_TOKENS:
        raise ValueError(f"visual token index {j} outside [1, {MAX_VISUAL_TOKENS}]")
    return f"<visual_token_{j}>"


FRAME_TOKENS = tuple(frame_token(i) for i in range(1, MAX_FRAME_TOKENS + 1))
VISUAL_TOKENS = tuple(visual_token(j) for j in range(1, MAX_VISUAL_TOKENS + 1))

ALL_SENTINELS: tuple[str, ...] = (
    CONTROL_TOKENS + DIALOG_TOKENS + ROUTE_TOKENS + MATCH_TOKENS + FRAME_TOKENS + VISUAL_TOKENS
)

# Reserved tokens occupy the lowest vocabulary ids in ALL_SENTINELS order, so
# sentinel vocabulary ids are canonical constants for any default vocabulary.
CANONICAL_IDS = {token: i for i, token in enumerate(ALL_SENTINELS)}
FRAME_TOKEN_VOCAB_IDS = tuple(CANONICAL_IDS[t] for t in FRAME_TOKENS)
VISUAL_TOKEN_VOCAB_IDS = tuple(CANONICAL_IDS[t] for t in VISUAL_TOKENS)

_FRAME_PREFIX = "<frame_token_"
_VISUAL_PREFIX = "<visual_token_"


def parse_frame_token(text: str) -> int | None:
    """Frame index when `text` is exactly a frame sentinel, else None."""
    if text.startswith(_FRAME_PREFIX) and text.endswith(">"):
        body = text[len(_FRAME_PREFIX):-1]
        if body.isdigit() and 1 <= int(body) <= MAX_FRAME_TOKENS:
            return int(body)
    return None


def parse_visual_token(text: str) -> int | None:
    if text.startswith(_VISUAL_PREFIX) and text.endswith(">"):
        body = text[len(_VISUAL_PREFIX):-1]
        if body.isdigit() and 1 <= int(body) <= MAX_VISUAL_TOKENS:
            return int(body)
    return None
