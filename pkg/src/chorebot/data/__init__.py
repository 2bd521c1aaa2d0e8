"""Synthetic data pipelines: expert planner, missions, augmentations."""

from .clarifications import ClarificationError, ClarificationQA, QType, gen_clarification
from .missions import (
    CDFMission,
    InstructionSpec,
    MissionGenerationError,
    SUPPORTED_CATEGORIES,
    generate_mission,
    load_missions,
    save_missions,
)
from .oracle import match_for_count, oracle_cr, oracle_ground
from .pipeline import build_finetune_data, build_missions, trajectory_samples, worlds_for_augs
from .planner import ExpertAgent, ExpertError, expert_script, expert_solve, generate_missions
from .templates import TEMPLATE_BANK, TemplateError, paraphrase
from .visual_augs import (
    AugReport,
    DEFAULT_CAPS_TRAIN,
    DEFAULT_CAPS_VALIDATION,
    VisualAugSample,
    aug_to_task_samples,
    gen_visual_augs,
    negativize,
    negativize_all,
)
