"""Multitask training: mixing, featurization, synthetic pretraining tasks."""

from .datasets import (
    FrameData,
    RegionData,
    TaskDataset,
    TaskSample,
    group_by_task,
    load_samples,
    save_samples,
)
from .featurize import encode_batch, region_feature, scene_feature, shuffle_sample_tokens
from .mixing import compute_task_probs, mixture_probs, sample_mixed_batch
from .pretrain_data import (
    MLM_MASK_PROBABILITY,
    Scene,
    build_pretrain_dataset,
    caption_for,
    make_pretrain_sample,
    sample_scenes,
    scene_from_world,
    snapshot_frame,
)
from .trainer import (
    CROfflineReport,
    FINETUNE_TASKS,
    TrainConfig,
    TrainReport,
    eval_cr_offline,
    finetune,
    score_cr_texts,
    train,
)
