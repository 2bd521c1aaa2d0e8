"""Vocabulary, prompt templates, and the structured action language."""

from .actions import (
    ALL_VERBS,
    ActionErrorKind,
    ActionParseError,
    ActionPhrase,
    CRErrorKind,
    CRParseError,
    CRPrediction,
    MANIPULATION_VERBS,
    Match,
    NAVIGATION_VERBS,
    PRIMITIVE_VERBS,
    Route,
    assign_visual_tokens,
    format_dialog,
    parse_actions,
    parse_cr,
    parse_dialog,
    serialize_actions,
)
from .bpe import DEFAULT_TARGET_SIZE, PAPER_TARGET_SIZE, Vocabulary, VocabularyError, train_bpe
from .prompts import PROMPT_TEMPLATES, TASK_IDS, PromptError, build_prompt
from .sentinels import (
    ACT,
    ALL_SENTINELS,
    BOS,
    COMMANDER,
    EOS,
    FOLLOWER,
    MASK,
    MATCH_TOKENS,
    MAX_FRAME_TOKENS,
    MAX_VISUAL_TOKENS,
    MULTIPLE_MATCHES,
    NO_MATCH,
    ONE_MATCH,
    PAD,
    ROUTE_TOKENS,
    SEARCH,
    STOP,
    frame_token,
    parse_frame_token,
    parse_visual_token,
    visual_token,
)
