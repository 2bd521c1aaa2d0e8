"""Model configuration and the packed batch format."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    enc_layers: int = 2
    dec_layers: int = 2
    heads: int = 4
    d_model: int = 128
    d_ff: int = 256
    dropout: float = 0.1
    max_text_positions: int = 256
    max_target_positions: int = 64
    max_visual_slots: int = 160
    region_feature_dim: int = 64
    scene_feature_dim: int = 80
    max_frames: int = 64
    max_visual_tokens: int = 36

    def __post_init__(self):
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model {self.d_model} not divisible by heads {self.heads}")

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(doc: dict) -> "ModelConfig":
        return ModelConfig(**doc)


@dataclass
class EncodedBatch:
    """Padded numpy arrays for one training/inference batch.

    Frame and visual token ids use 0 as padding; real ids start at 1. Target
    arrays hold the gold ids; the decoder input is the BOS-shifted gold.
    """

    text_ids: np.ndarray          # (B, St) int64
    text_mask: np.ndarray         # (B, St) float64, 1 = real token
    scene_feats: np.ndarray       # (B, F, scene_dim)
    scene_frames: np.ndarray      # (B, F) int64
    region_feats: np.ndarray      # (B, R, region_dim)
    region_bbox: np.ndarray       # (B, R, 4)
    region_frames: np.ndarray     # (B, R) int64
    region_tokens: np.ndarray     # (B, R) int64
    dec_in: np.ndarray            # (B, T) int64
    targets: np.ndarray           # (B, T) int64
    target_mask: np.ndarray       # (B, T) float64
    region_tags: np.ndarray = None  # (B, R, L) int64 word ids naming each region
    task_ids: list = field(default_factory=list)

    def __post_init__(self):
        if self.region_tags is None:
            b, r = self.region_tokens.shape
            self.region_tags = np.zeros((b, r, 1), dtype=np.int64)

    @property
    def batch_size(self) -> int:
        return self.text_ids.shape[0]

    def validate(self, config: ModelConfig) -> None:
        if self.text_ids.max(initial=0) >= config.vocab_size:
            raise ValueError("text id outside vocabulary")
        if int(self.region_tokens.max(initial=0)) > config.max_visual_tokens:
            raise ValueError("visual token id outside [1, 36]")
        if int(self.region_frames.max(initial=0)) > config.max_frames:
            raise ValueError("frame index outside the sentinel range")
        bbox = self.region_bbox
        if bbox.size and (bbox.min() < 0.0 or bbox.max() > 1.0):
            raise ValueError("bbox coordinates must be normalized to [0, 1]")
        real = self.region_tokens > 0
        for b in range(self.region_frames.shape[0]):
            frames, counts = np.unique(self.region_frames[b][real[b]], return_counts=True)
            if counts.size and counts.max() > config.max_visual_tokens:
                raise ValueError("more than 36 regions in one frame")
            scene_frames = set(self.scene_frames[b][self.scene_frames[b] > 0].tolist())
            if not set(frames.tolist()) <= scene_frames:
                raise ValueError("region frame without a matching scene frame")
