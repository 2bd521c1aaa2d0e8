import numpy as np

from chorebot.model import EncodedBatch


def make_model_batch(config, batch=2, text_len=5, frames=2, regions=4, target_len=3, seed=0):
    """Random well-formed batch for direct model tests."""
    rng = np.random.default_rng(seed)
    text_ids = rng.integers(1, config.vocab_size, size=(batch, text_len))
    scene_feats = rng.normal(size=(batch, frames, config.scene_feature_dim))
    scene_frames = np.tile(np.arange(1, frames + 1), (batch, 1))
    region_feats = rng.normal(size=(batch, regions, config.region_feature_dim))
    region_bbox = rng.uniform(0.1, 0.9, size=(batch, regions, 4))
    region_frames = np.tile((np.arange(regions) % frames) + 1, (batch, 1))
    region_tokens = np.tile((np.arange(regions) // frames) + 1, (batch, 1))
    region_tags = rng.integers(1, config.vocab_size, size=(batch, regions, 2))
    targets = rng.integers(1, config.vocab_size, size=(batch, target_len))
    dec_in = np.concatenate([np.zeros((batch, 1), dtype=np.int64), targets[:, :-1]], axis=1)
    return EncodedBatch(
        text_ids=text_ids.astype(np.int64),
        text_mask=np.ones((batch, text_len)),
        scene_feats=scene_feats,
        scene_frames=scene_frames.astype(np.int64),
        region_feats=region_feats,
        region_bbox=region_bbox,
        region_frames=region_frames.astype(np.int64),
        region_tokens=region_tokens.astype(np.int64),
        dec_in=dec_in.astype(np.int64),
        targets=targets.astype(np.int64),
        target_mask=np.ones((batch, target_len)),
        region_tags=region_tags.astype(np.int64),
    )
