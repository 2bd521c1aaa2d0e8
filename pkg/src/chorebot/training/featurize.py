"""Symbolic region features and batch assembly.

A detection becomes a fixed multi-hot vector over (class, color, state bits)
plus its bbox area; the model learns projections on top. The scene feature is
the mean of the frame's region features concatenated with a hashed room slot,
so an empty frame still identifies its room.
"""

from __future__ import annotations

import random
import re
import zlib
from typing import Optional, Sequence

import numpy as np

from ..grammar import BOS, EOS, Vocabulary, assign_visual_tokens
from ..model.config import EncodedBatch, ModelConfig
from ..world.catalog import COLORS, OBJECT_CLASSES
from .datasets import FrameData, RegionData, TaskSample

CLASS_INDEX = {name: i for i, name in enumerate(sorted(OBJECT_CLASSES))}
COLOR_INDEX = {name: i for i, name in enumerate(COLORS)}
N_CLASSES = len(CLASS_INDEX)
N_COLORS = len(COLOR_INDEX)
N_STATE_BITS = 7

REGION_FEATURE_DIM = 64
ROOM_SLOTS = 16
SCENE_FEATURE_DIM = REGION_FEATURE_DIM + ROOM_SLOTS

_COLOR_OFFSET = N_CLASSES
_STATE_OFFSET = N_CLASSES + N_COLORS
_AREA_OFFSET = _STATE_OFFSET + N_STATE_BITS


def region_feature(region: RegionData) -> np.ndarray:
    vec = np.zeros(REGION_FEATURE_DIM)
    vec[CLASS_INDEX[region.class_name]] = 1.0
    vec[_COLOR_OFFSET + COLOR_INDEX[region.color]] = 1.0
    for i, bit in enumerate(region.state_bits):
        if bit:
            vec[_STATE_OFFSET + i] = 1.0
    x1, y1, x2, y2 = region.bbox
    vec[_AREA_OFFSET] = (x2 - x1) * (y2 - y1)
    return vec


def scene_feature(frame: FrameData) -> np.ndarray:
    vec = np.zeros(SCENE_FEATURE_DIM)
    if frame.regions:
        vec[:REGION_FEATURE_DIM] = np.mean([region_feature(r) for r in frame.regions], axis=0)
    room_slot = zlib.crc32(frame.room.encode()) % ROOM_SLOTS
    vec[REGION_FEATURE_DIM + room_slot] = 1.0
    return vec


_VISUAL_RE = re.compile(r"<visual_token_(\d+)>")
_FRAME_RE = re.compile(r"<frame_token_(\d+)>")


def shuffle_sample_tokens(sample: TaskSample, rng: random.Random,
                          remap_frames: bool = True) -> TaskSample:
    """Re-draw visual token identities per frame (seeded permutation) and
    remap frame ids to a random order-preserving subset of the sentinel
    range, rewriting every reference in input and target text consistently.

    The frame remap keeps temporal order while exposing the whole frame
    sentinel range during training, matching live episodes whose frame
    counters keep growing."""
    from ..grammar import MAX_FRAME_TOKENS

    visual_map: dict[int, int] = {}
    frame_map: dict[int, int] = {}
    if remap_frames and sample.frames:
        new_ids = sorted(rng.sample(range(1, MAX_FRAME_TOKENS + 1), len(sample.frames)))
        frame_map = {frame.frame_id: new for frame, new in zip(sample.frames, new_ids)}
    new_frames = []
    for frame in sample.frames:
        assignment = assign_visual_tokens(len(frame.regions), rng=rng, shuffle=True)
        regions = []
        for i, region in enumerate(frame.regions):
            visual_map[region.token] = assignment[i]
            regions.append(RegionData(
                class_name=region.class_name, color=region.color, state_bits=region.state_bits,
                bbox=region.bbox, token=assignment[i], object_id=region.object_id,
            ))
        new_frames.append(FrameData(frame_map.get(frame.frame_id, frame.frame_id),
                                    frame.room, tuple(regions)))

    def rewrite(text: str) -> str:
        text = _VISUAL_RE.sub(
            lambda m: f"<visual_token_{visual_map.get(int(m.group(1)), int(m.group(1)))}>", text
        )
        return _FRAME_RE.sub(
            lambda m: f"<frame_token_{frame_map.get(int(m.group(1)), int(m.group(1)))}>", text
        )

    return TaskSample(
        task_id=sample.task_id,
        text=rewrite(sample.text),
        frames=tuple(new_frames),
        target=rewrite(sample.target),
        meta=sample.meta,
    )


def encode_batch(
    samples: Sequence[TaskSample],
    vocab: Vocabulary,
    config: ModelConfig,
    shuffle_tokens: bool = False,
    rng: Optional[random.Random] = None,
    noise_sigma: float = 0.0,
) -> EncodedBatch:
    """Pack samples into padded arrays, optionally shuffling token identities
    and adding Gaussian feature noise (train-time augmentations)."""
    if shuffle_tokens:
        if rng is None:
            rng = random.Random(0)
        samples = [shuffle_sample_tokens(s, rng) for s in samples]

    bos, eos = vocab.sentinel_id(BOS), vocab.sentinel_id(EOS)
    tag_cache: dict[tuple[str, str], list[int]] = {}

    def tags_for(region: RegionData) -> list[int]:
        key = (region.color, region.class_name)
        ids = tag_cache.get(key)
        if ids is None:
            ids = vocab.encode(f"{region.color} {region.class_name}")
            tag_cache[key] = ids
        return ids

    text_ids = [vocab.encode(s.text)[: config.max_text_positions] for s in samples]
    target_ids = []
    for s in samples:
        ids = vocab.encode(s.target) + [eos]
        if len(ids) > config.max_target_positions:
            raise ValueError(f"target too long ({len(ids)} tokens): {s.target[:60]!r}")
        target_ids.append(ids)

    b = len(samples)
    st = max(len(t) for t in text_ids)
    tt = max(len(t) for t in target_ids)
    nf = max(1, max(len(s.frames) for s in samples))
    nr = max(1, max(sum(len(f.regions) for f in s.frames) for s in samples))
    nl = 1
    for s in samples:
        for f in s.frames:
            for r in f.regions:
                nl = max(nl, len(tags_for(r)))

    batch = EncodedBatch(
        text_ids=np.zeros((b, st), dtype=np.int64),
        text_mask=np.zeros((b, st)),
        scene_feats=np.zeros((b, nf, config.scene_feature_dim)),
        scene_frames=np.zeros((b, nf), dtype=np.int64),
        region_feats=np.zeros((b, nr, config.region_feature_dim)),
        region_bbox=np.zeros((b, nr, 4)),
        region_frames=np.zeros((b, nr), dtype=np.int64),
        region_tokens=np.zeros((b, nr), dtype=np.int64),
        dec_in=np.zeros((b, tt), dtype=np.int64),
        targets=np.zeros((b, tt), dtype=np.int64),
        target_mask=np.zeros((b, tt)),
        region_tags=np.zeros((b, nr, nl), dtype=np.int64),
        task_ids=[s.task_id for s in samples],
    )
    noise_rng = np.random.default_rng(rng.getrandbits(32)) if (noise_sigma > 0 and rng) else None
    for i, sample in enumerate(samples):
        ids = text_ids[i]
        batch.text_ids[i, : len(ids)] = ids
        batch.text_mask[i, : len(ids)] = 1.0
        r = 0
        for fi, frame in enumerate(sample.frames):
            batch.scene_feats[i, fi] = scene_feature(frame)
            batch.scene_frames[i, fi] = frame.frame_id
            for region in frame.regions:
                feat = region_feature(region)
                if noise_rng is not None:
                    feat = feat + noise_rng.normal(0.0, noise_sigma, feat.shape)
                batch.region_feats[i, r] = feat
                batch.region_bbox[i, r] = region.bbox
                batch.region_frames[i, r] = frame.frame_id
                batch.region_tokens[i, r] = region.token
                tags = tags_for(region)
                batch.region_tags[i, r, : len(tags)] = tags
                r += 1
        tgt = target_ids[i]
        batch.targets[i, : len(tgt)] = tgt
        batch.dec_in[i, 0] = bos
        batch.dec_in[i, 1: len(tgt)] = tgt[:-1]
        batch.target_mask[i, : len(tgt)] = 1.0
    return batch
