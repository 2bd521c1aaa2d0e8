"""Benchmark harness and ablation tooling."""

from .ablation import ablation_run, downsample_ae, write_curve
from .harness import (
    BenchmarkReport,
    COUNTING_RULE,
    EpisodeResult,
    InstructionRecord,
    category_report,
    compute_report,
    load_episodes,
    localization_by_question_type,
    report_to_csv,
    run_benchmark,
    run_episode,
    save_episodes,
)
