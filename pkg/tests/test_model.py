import math

import numpy as np
import pytest

from chorebot.model import (
    AdamW,
    EncodedBatch,
    ModelConfig,
    Seq2SeqModel,
    grad_check,
    load_checkpoint,
    save_checkpoint,
    sequence_loss,
)
from chorebot.model import autodiff as ad
from chorebot.model.network import NEG_INF


TINY = ModelConfig(
    vocab_size=128, enc_layers=1, dec_layers=1, heads=2, d_model=16, d_ff=24,
    dropout=0.0, max_text_positions=32, max_target_positions=16,
    region_feature_dim=8, scene_feature_dim=10, max_frames=8, max_visual_tokens=36,
)


def make_batch(config, batch=2, text_len=5, frames=2, regions=4, target_len=3, seed=0):
    rng = np.random.default_rng(seed)
    text_ids = rng.integers(1, config.vocab_size, size=(batch, text_len))
    text_mask = np.ones((batch, text_len))
    scene_feats = rng.normal(size=(batch, frames, config.scene_feature_dim))
    scene_frames = np.tile(np.arange(1, frames + 1), (batch, 1))
    region_feats = rng.normal(size=(batch, regions, config.region_feature_dim))
    region_bbox = rng.uniform(0.1, 0.9, size=(batch, regions, 4))
    region_frames = np.tile((np.arange(regions) % frames) + 1, (batch, 1))
    region_tokens = np.tile((np.arange(regions) // frames) + 1, (batch, 1))
    targets = rng.integers(1, config.vocab_size, size=(batch, target_len))
    dec_in = np.concatenate([np.zeros((batch, 1), dtype=np.int64), targets[:, :-1]], axis=1)
    target_mask = np.ones((batch, target_len))
    return EncodedBatch(
        text_ids=text_ids.astype(np.int64), text_mask=text_mask,
        scene_feats=scene_feats, scene_frames=scene_frames.astype(np.int64),
        region_feats=region_feats, region_bbox=region_bbox,
        region_frames=region_frames.astype(np.int64), region_tokens=region_tokens.astype(np.int64),
        dec_in=dec_in.astype(np.int64), targets=targets.astype(np.int64), target_mask=target_mask,
    )


class TestEmbeddings:
    def test_text_embedding_is_word_plus_position(self):
        model = Seq2SeqModel(TINY, seed=1)
        out = model.embed_text(np.asarray([[7]]))
        expected = model.params["tok_emb"].data[7] + model.params["pos_emb"].data[0]
        np.testing.assert_array_equal(out.data[0, 0], expected)

    def test_position_sensitivity(self):
        model = Seq2SeqModel(TINY, seed=1)
        a = model.embed_text(np.asarray([[3, 9]]))
        b = model.embed_text(np.asarray([[9, 3]]))
        assert not np.allclose(a.data, b.data)

    def test_same_token_differs_by_position_delta(self):
        model = Seq2SeqModel(TINY, seed=1)
        out = model.embed_text(np.asarray([[5, 5]]))
        delta = out.data[0, 1] - out.data[0, 0]
        expected = model.params["pos_emb"].data[1] - model.params["pos_emb"].data[0]
        np.testing.assert_allclose(delta, expected, atol=1e-12)

    def test_zero_region_isolates_additive_terms(self):
        model = Seq2SeqModel(TINY, seed=1)
        scene, region = model.embed_frames(
            scene_feats=np.zeros((1, 1, TINY.scene_feature_dim)),
            scene_frames=np.asarray([[1]]),
            region_feats=np.zeros((1, 1, TINY.region_feature_dim)),
            region_bbox=np.zeros((1, 1, 4)),
            region_frames=np.asarray([[1]]),
            region_tokens=np.asarray([[1]]),
        )
        from chorebot.model.network import _FRAME_ID_LUT, _VISUAL_ID_LUT

        tok = model.params["tok_emb"].data
        expected = tok[_FRAME_ID_LUT[1]] + tok[_VISUAL_ID_LUT[1]]
        np.testing.assert_allclose(region.data[0, 0], expected, atol=1e-12)
        np.testing.assert_allclose(scene.data[0, 0], tok[_FRAME_ID_LUT[1]], atol=1e-12)

    def test_frame_shift_changes_by_frame_embedding_delta(self):
        model = Seq2SeqModel(TINY, seed=1)
        feats = np.random.default_rng(0).normal(size=(1, 1, TINY.region_feature_dim))
        bbox = np.full((1, 1, 4), 0.5)
        _, r1 = model.embed_frames(np.zeros((1, 1, TINY.scene_feature_dim)), np.asarray([[1]]),
                                   feats, bbox, np.asarray([[1]]), np.asarray([[2]]))
        _, r2 = model.embed_frames(np.zeros((1, 1, TINY.scene_feature_dim)), np.asarray([[2]]),
                                   feats, bbox, np.asarray([[2]]), np.asarray([[2]]))
        from chorebot.model.network import _FRAME_ID_LUT

        tok = model.params["tok_emb"].data
        delta = r2.data[0, 0] - r1.data[0, 0]
        expected = tok[_FRAME_ID_LUT[2]] - tok[_FRAME_ID_LUT[1]]
        np.testing.assert_allclose(delta, expected, atol=1e-12)

    def test_region_cap_per_frame(self):
        batch = make_batch(TINY, batch=1, frames=1, regions=37)
        with pytest.raises(ValueError, match="36|token"):
            batch.validate(TINY)

    def test_out_of_range_visual_token_rejected(self):
        model = Seq2SeqModel(TINY, seed=1)
        with pytest.raises(ValueError):
            model.embed_frames(np.zeros((1, 1, TINY.scene_feature_dim)), np.asarray([[1]]),
                               np.zeros((1, 1, TINY.region_feature_dim)), np.zeros((1, 1, 4)),
                               np.asarray([[1]]), np.asarray([[37]]))


class TestForward:
    def test_logits_shape(self):
        model = Seq2SeqModel(TINY, seed=2)
        batch = make_batch(TINY, batch=1, target_len=3)
        logits = model.forward(batch)
        assert logits.data.shape == (1, 3, TINY.vocab_size)

    def test_batch_independence(self):
        model = Seq2SeqModel(TINY, seed=2)
        single = make_batch(TINY, batch=1, seed=5)
        double = EncodedBatch(
            **{
                f: np.concatenate([getattr(single, f)] * 2, axis=0)
                for f in (
                    "text_ids", "text_mask", "scene_feats", "scene_frames", "region_feats",
                    "region_bbox", "region_frames", "region_tokens", "dec_in", "targets", "target_mask",
                )
            }
        )
        one = model.forward(single).data
        two = model.forward(double).data
        np.testing.assert_allclose(two[0], one[0], atol=1e-12)
        np.testing.assert_allclose(two[1], one[0], atol=1e-12)

    def test_padding_token_cannot_leak(self):
        model = Seq2SeqModel(TINY, seed=2)
        batch = make_batch(TINY, batch=1, text_len=6)
        batch.text_mask[0, -1] = 0.0
        base = model.forward(batch).data
        batch.text_ids[0, -1] = (batch.text_ids[0, -1] + 11) % TINY.vocab_size
        changed = model.forward(batch).data
        np.testing.assert_array_equal(base, changed)


class TestLoss:
    def test_uniform_logits_give_log_vocab(self):
        logits = ad.constant(np.zeros((2, 3, 4)))
        targets = np.zeros((2, 3), dtype=np.int64)
        mask = np.ones((2, 3))
        loss = sequence_loss(logits, targets, mask, smoothing=0.0)
        assert abs(float(loss.data) - math.log(4)) < 1e-9

    def test_per_sample_then_batch_average(self):
        rng = np.random.default_rng(3)
        logits_np = rng.normal(size=(2, 4, 6))
        targets = rng.integers(0, 6, size=(2, 4))
        mask = np.asarray([[1.0, 1.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0]])
        # independent oracle: plain per-token cross entropies
        shifted = logits_np - logits_np.max(-1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(-1, keepdims=True))
        per_tok = -np.take_along_axis(logp, targets[..., None], -1)[..., 0]
        expected = ((per_tok[0, :2].mean()) + (per_tok[1].mean())) / 2
        loss = sequence_loss(ad.constant(logits_np), targets, mask)
        assert abs(float(loss.data) - expected) < 1e-12

    def test_padding_invariance_exact(self):
        rng = np.random.default_rng(4)
        logits_np = rng.normal(size=(1, 3, 5))
        targets = rng.integers(0, 5, size=(1, 3))
        base = sequence_loss(ad.constant(logits_np), targets, np.ones((1, 3)))
        padded_logits = np.concatenate([logits_np, rng.normal(size=(1, 2, 5))], axis=1)
        padded_targets = np.concatenate([targets, np.zeros((1, 2), dtype=np.int64)], axis=1)
        mask = np.asarray([[1.0, 1.0, 1.0, 0.0, 0.0]])
        padded = sequence_loss(ad.constant(padded_logits), padded_targets, mask)
        assert float(base.data) == float(padded.data)

    def test_zero_length_target_rejected(self):
        with pytest.raises(ValueError):
            sequence_loss(ad.constant(np.zeros((1, 2, 4))), np.zeros((1, 2), dtype=np.int64), np.zeros((1, 2)))

    def test_label_smoothing_uniform_logits_still_log_vocab(self):
        logits = ad.constant(np.zeros((1, 2, 4)))
        loss = sequence_loss(logits, np.zeros((1, 2), dtype=np.int64), np.ones((1, 2)), smoothing=0.1)
        assert abs(float(loss.data) - math.log(4)) < 1e-12


class TestGradients:
    def test_full_model_gradcheck(self):
        model = Seq2SeqModel(TINY, seed=3)
        batch = make_batch(TINY, batch=2, seed=9)
        worst = grad_check(model, batch, eps=1e-5, num_coords=200)
        assert worst < 1e-4

    def test_gradcheck_with_label_smoothing(self):
        model = Seq2SeqModel(TINY, seed=4)
        batch = make_batch(TINY, batch=1, seed=10)
        assert grad_check(model, batch, eps=1e-5, num_coords=120, smoothing=0.1) < 1e-4

    def test_linear_only_path_is_exact(self):
        rng = np.random.default_rng(5)
        w = ad.parameter(rng.normal(size=(6, 4)))
        x = ad.constant(rng.normal(size=(3, 6)))
        loss = ad.reduce_sum(ad.matmul(x, w))
        loss.backward()
        analytic = w.grad.copy()
        worst = 0.0
        for flat in range(w.data.size):
            orig = w.data.flat[flat]
            w.data.flat[flat] = orig + 1e-6
            fp = float(ad.matmul(x, ad.Tensor(w.data)).data.sum())
            w.data.flat[flat] = orig - 1e-6
            fm = float(ad.matmul(x, ad.Tensor(w.data)).data.sum())
            w.data.flat[flat] = orig
            numeric = (fp - fm) / 2e-6
            worst = max(worst, abs(numeric - analytic.flat[flat]) / max(abs(numeric), 1e-9))
        assert worst < 1e-8

    def test_zero_loss_batch_has_zero_gradient(self):
        # force probability ~1 on the target class
        logits_np = np.full((1, 2, 4), -1e4)
        targets = np.asarray([[1, 2]])
        logits_np[0, 0, 1] = 1e4
        logits_np[0, 1, 2] = 1e4
        logits = ad.parameter(logits_np)
        loss = sequence_loss(logits, targets, np.ones((1, 2)))
        loss.backward()
        assert float(loss.data) < 1e-9
        assert np.abs(logits.grad).max() < 1e-12


class TestDeterminismAndCheckpoint:
    def _train_steps(self, seed, steps=3):
        model = Seq2SeqModel(TINY, seed=seed)
        opt = AdamW(model.params, lr=1e-3, warmup_steps=1, total_steps=10)
        batch = make_batch(TINY, batch=2, seed=1)
        losses = []
        for _ in range(steps):
            model.zero_grad()
            loss = model.loss(batch, smoothing=0.1)
            loss.backward()
            opt.step()
            losses.append(float(loss.data))
        return model, losses

    def test_bit_identical_training(self):
        model_a, losses_a = self._train_steps(7)
        model_b, losses_b = self._train_steps(7)
        assert losses_a == losses_b
        for name in model_a.params:
            np.testing.assert_array_equal(model_a.params[name].data, model_b.params[name].data)

    def test_loss_decreases_on_memorizable_batch(self):
        _, losses = self._train_steps(8, steps=30)
        assert losses[-1] < losses[0]

    def test_checkpoint_round_trip_bit_for_bit(self, tmp_path):
        model, _ = self._train_steps(9)
        batch = make_batch(TINY, batch=1, seed=2)
        before = model.forward(batch).data
        path = tmp_path / "model.npz"
        save_checkpoint(model, path, vocab_digest="abc123")
        loaded, digest = load_checkpoint(path)
        assert digest == "abc123"
        after = loaded.forward(batch).data
        np.testing.assert_array_equal(before, after)

    def test_dropout_changes_training_forward_only(self):
        model = Seq2SeqModel(ModelConfig(**{**TINY.to_json(), "dropout": 0.2}), seed=1)
        batch = make_batch(model.config, batch=1, seed=3)
        train_a = model.loss(batch, rng=np.random.default_rng(0))
        train_b = model.loss(batch, rng=np.random.default_rng(1))
        assert float(train_a.data) != float(train_b.data)
        eval_a = model.loss(batch)
        eval_b = model.loss(batch)
        assert float(eval_a.data) == float(eval_b.data)


class TestGenerate:
    def _setup(self):
        from chorebot.grammar import train_bpe, ALL_SENTINELS, STOP
        from chorebot.model.generate import generate

        vocab = train_bpe(["go to the red mug now"], target_size=256 + len(ALL_SENTINELS) + 10)
        config = ModelConfig(
            vocab_size=vocab.size, enc_layers=1, dec_layers=1, heads=2, d_model=16, d_ff=16,
            dropout=0.0, region_feature_dim=8, scene_feature_dim=10, max_frames=8,
        )
        model = Seq2SeqModel(config, seed=11)
        batch = make_batch(config, batch=1, text_len=4, seed=4)
        return generate, model, vocab, batch

    def test_banned_sentinels_never_emitted(self):
        generate, model, vocab, batch = self._setup()
        banned = vocab.reserved_ids
        text = generate(model, vocab, batch, banned_ids=banned, max_len=8)
        for sentinel in vocab.reserved:
            assert sentinel not in text

    def test_max_len_one_gives_one_token(self):
        generate, model, vocab, batch = self._setup()
        ids = vocab.encode(generate(model, vocab, batch, max_len=1))
        assert len(ids) == 1

    def test_greedy_is_deterministic(self):
        generate, model, vocab, batch = self._setup()
        assert generate(model, vocab, batch, max_len=6) == generate(model, vocab, batch, max_len=6)

    def test_all_banned_raises(self):
        from chorebot.model.generate import AllTokensBanned

        generate, model, vocab, batch = self._setup()
        with pytest.raises(AllTokensBanned):
            generate(model, vocab, batch, banned_ids=range(vocab.size), max_len=4)
