"""Decision loop, search planning, sessions, and object memory."""

from .formats import ae_input, ae_sample, cr_input, cr_sample, vg_input, vg_sample
from .memory import ObjectMemory, ObjectMemoryEntry
from .planning import SearchPlan, SearchStop, plan_viewpoints
from .referents import match_count, matching_regions, mention, split_referent
from .runtime import (
    AE_FRAME_WINDOW,
    ExecutedAction,
    InstructionOutcome,
    InstructionStatus,
    ModelAgent,
    ModelBundle,
    QAMode,
    expected_mission_success,
)
from .session import DEFAULT_STEP_BUDGET, FrameRecord, Session, StepRecord, phrase_to_command
