import math
import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chorebot.grammar import ALL_SENTINELS, train_bpe
from chorebot.model import ModelConfig, Seq2SeqModel
from chorebot.training import (
    FrameData,
    RegionData,
    Scene,
    TaskDataset,
    TaskSample,
    TrainConfig,
    compute_task_probs,
    encode_batch,
    group_by_task,
    load_samples,
    make_pretrain_sample,
    mixture_probs,
    sample_mixed_batch,
    sample_scenes,
    save_samples,
    score_cr_texts,
    shuffle_sample_tokens,
    train,
)
from chorebot.world import load_layout
from chorebot.world.generate import generate_layout

from conftest import TWO_ROOM_LAYOUT


def region(cls="mug", color="red", token=1, bbox=(0.4, 0.4, 0.6, 0.6), oid="obj"):
    return RegionData(class_name=cls, color=color, state_bits=(0,) * 7, bbox=bbox, token=token, object_id=oid)


def one_object_scene(cls="mug", color="red", token=3):
    frame = FrameData(frame_id=1, room="kitchen", regions=(region(cls, color, token),))
    return Scene(frame=frame)


class TestComputeTaskProbs:
    def test_appendix_formula_case(self):
        probs = compute_task_probs([100, 300, 900], 3)
        assert probs == [pytest.approx(1 / 7), pytest.approx(3 / 7), pytest.approx(3 / 7)]

    def test_equal_counts_symmetric(self):
        assert compute_task_probs([42, 42], 7) == [0.5, 0.5]

    def test_infinite_cap_recovers_proportional(self):
        probs = compute_task_probs([10, 30, 60], 1e9)
        assert probs == [pytest.approx(0.1), pytest.approx(0.3), pytest.approx(0.6)]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_task_probs([], 3)

    @given(st.lists(st.integers(1, 10_000), min_size=1, max_size=8), st.floats(1, 50))
    @settings(max_examples=200)
    def test_probabilities_sum_to_one(self, counts, ratio):
        probs = compute_task_probs(counts, ratio)
        assert abs(sum(probs) - 1.0) < 1e-12
        assert all(p > 0 for p in probs)

    @given(st.lists(st.integers(1, 1000), min_size=2, max_size=6))
    @settings(max_examples=200)
    def test_cap_monotonicity_for_largest_task(self, counts):
        big = counts.index(max(counts))
        p_small = compute_task_probs(counts, 1.5)[big]
        p_large = compute_task_probs(counts, 4.0)[big]
        assert p_large >= p_small - 1e-12


class TestSampleMixedBatch:
    def _datasets(self, counts):
        out = {}
        for i, n in enumerate(counts):
            task = ["CR", "AE", "VG"][i]
            samples = [
                TaskSample(task, f"input {j}", (), f"target {j}") for j in range(n)
            ]
            out[task] = TaskDataset(task, samples)
        return out

    def test_single_task_fills_batch(self):
        datasets = self._datasets([5])
        probs = mixture_probs(datasets, 3)
        batch = sample_mixed_batch(datasets, probs, 16, rng=0)
        assert all(s.task_id == "CR" for s in batch)

    def test_seeded_reproducibility(self):
        datasets = self._datasets([10, 20, 30])
        probs = mixture_probs(datasets, 3)
        a = sample_mixed_batch(datasets, probs, 32, rng=5)
        b = sample_mixed_batch(datasets, probs, 32, rng=5)
        assert [s.text for s in a] == [s.text for s in b]

    def test_empirical_frequencies_converge(self):
        datasets = self._datasets([100, 300, 900])
        probs = mixture_probs(datasets, 3)
        rng = random.Random(11)
        counts = Counter()
        draws = 200_000
        batch = sample_mixed_batch(datasets, probs, draws, rng)
        counts.update(s.task_id for s in batch)
        for task, p in probs.items():
            assert abs(counts[task] / draws - p) < 0.005


class TestPretrainTasks:
    def test_vg_single_mug_at_token_3(self):
        scene = one_object_scene("mug", "red", token=3)
        sample = make_pretrain_sample(scene, "VG", random.Random(0))
        assert sample.target == "<visual_token_3>"
        assert "mug" in sample.text
        assert sample.text.split(":")[0] + ":" in {
            "Find the object:", "Locate the object:", "Pick the object:", "Select the object:",
        }

    def test_itm_matched_pair_is_true(self):
        scene = one_object_scene()
        sample = make_pretrain_sample(scene, "ITM", random.Random(0), negative_pool=None)
        assert sample.target == "True"

    def test_mlm_mask_probability_one_masks_everything(self):
        scene = one_object_scene()
        sample = make_pretrain_sample(scene, "MLM", random.Random(0), mask_probability=1.0)
        masked_part = sample.text.split(":", 1)[1].strip()
        assert set(masked_part.split()) == {"<MASK>"}

    def test_mlm_mask_rate_converges_to_30_percent(self):
        rng = random.Random(1)
        scene = Scene(FrameData(1, "kitchen", tuple(region(oid=f"o{i}", token=i + 1) for i in range(4))))
        masked = total = 0
        while total < 100_000:
            sample = make_pretrain_sample(scene, "MLM", rng)
            words = sample.text.split(":", 1)[1].split()
            masked += sum(1 for w in words if w == "<MASK>")
            total += len(words)
        assert abs(masked / total - 0.30) < 0.01

    def test_relation_five_field_order(self):
        mug = region("mug", "red", token=1, oid="mug_0")
        fridge = region("fridge", "white", token=2, oid="fridge_0")
        frame = FrameData(1, "kitchen", (mug, fridge))
        scene = Scene(frame, containment={"mug_0": "fridge_0"})
        sample = make_pretrain_sample(scene, "Relation", random.Random(0))
        assert sample.target == "red mug inside of white fridge"

    def test_relation_needs_two_objects(self):
        with pytest.raises(ValueError):
            make_pretrain_sample(one_object_scene(), "Relation", random.Random(0))

    def test_scenes_from_generated_world(self):
        world = load_layout(generate_layout(3))
        scenes = sample_scenes(world, 10, random.Random(3))
        assert len(scenes) == 10
        assert all(s.frame.regions for s in scenes)


@pytest.fixture(scope="module")
def small_vocab():
    lines = ["pick up the red mug on the desk", "find the cereal box", "toggle the lamp now"]
    return train_bpe(lines, target_size=256 + len(ALL_SENTINELS) + 40)


class TestFeaturize:
    def test_shuffle_rewrites_regions_and_text_consistently(self, small_vocab):
        frame = FrameData(1, "kitchen", (region(token=1, oid="a"), region("desk", "brown", 2, oid="b")))
        sample = TaskSample("VG", "Locate the object: the red mug", (frame,), "<visual_token_1>")
        shuffled = shuffle_sample_tokens(sample, random.Random(9))
        mug_region = next(r for r in shuffled.frames[0].regions if r.class_name == "mug")
        assert shuffled.target == f"<visual_token_{mug_region.token}>"
        tokens = [r.token for r in shuffled.frames[0].regions]
        assert len(set(tokens)) == 2 and all(1 <= t <= 36 for t in tokens)

    def test_shuffle_changes_targets_somewhere(self):
        frame = FrameData(1, "kitchen", tuple(region(token=i + 1, oid=f"o{i}") for i in range(5)))
        sample = TaskSample("VG", "Locate the object: the red mug", (frame,), "<visual_token_4>")
        outputs = {shuffle_sample_tokens(sample, random.Random(s)).target for s in range(20)}
        assert len(outputs) > 1

    def test_encode_batch_shapes_and_padding(self, small_vocab):
        frame = FrameData(1, "kitchen", (region(),))
        samples = [
            TaskSample("CR", "Predict the system act: pick up the mug", (frame,), "<act><one match> mug"),
            TaskSample("CR", "Predict the system act: find it", (frame,), "<act><no match> mug"),
        ]
        config = ModelConfig(vocab_size=small_vocab.size, d_model=32, heads=2, d_ff=32,
                             enc_layers=1, dec_layers=1)
        batch = encode_batch(samples, small_vocab, config)
        batch.validate(config)
        assert batch.text_ids.shape[0] == 2
        assert batch.dec_in[0, 0] == small_vocab.sentinel_id("<bos>")
        assert batch.target_mask.sum(axis=1).min() > 0

    def test_jsonl_round_trip(self, tmp_path):
        frame = FrameData(2, "office", (region("desk", "brown", 5, oid="d0"),))
        samples = [TaskSample("AE", "Execute the instruction: go", (frame,), "goto office . <stop>",
                              meta={"missionId": "m1"})]
        path = tmp_path / "samples.jsonl"
        save_samples(samples, path)
        loaded = load_samples(path)
        assert loaded == samples


class TestTrainer:
    def _tiny_setup(self, small_vocab):
        config = ModelConfig(vocab_size=small_vocab.size, enc_layers=1, dec_layers=1, heads=2,
                             d_model=24, d_ff=32, dropout=0.0)
        model = Seq2SeqModel(config, seed=5)
        frame = FrameData(1, "kitchen", (region(),))
        samples = [
            TaskSample("CR", "Predict the system act: pick up the mug", (frame,), "<act><one match> mug"),
            TaskSample("AE", "Execute the instruction: go to the desk", (frame,), "goto desk . <stop>"),
        ]
        return model, group_by_task(samples)

    def test_loss_decreases_on_memorizable_data(self, small_vocab):
        model, datasets = self._tiny_setup(small_vocab)
        config = TrainConfig(steps=60, batch_size=4, lr=3e-3, warmup_steps=5,
                             label_smoothing=0.0, seed=0, shuffle_visual_tokens=False)
        report = train(model, datasets, config, small_vocab)
        assert report.losses[-1] < report.losses[0]

    def test_metrics_csv_stream(self, small_vocab, tmp_path):
        model, datasets = self._tiny_setup(small_vocab)
        path = tmp_path / "metrics.csv"
        config = TrainConfig(steps=4, batch_size=2, lr=1e-3, warmup_steps=1, seed=0,
                             log_every=1, metrics_path=str(path))
        train(model, datasets, config, small_vocab)
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "step,loss,task_mix"
        assert len(rows) == 5

    def test_modular_task_filtering(self, small_vocab):
        from chorebot.training import finetune

        model, datasets = self._tiny_setup(small_vocab)
        config = TrainConfig(steps=2, batch_size=2, lr=1e-3, warmup_steps=1, seed=0)
        report = finetune(model, datasets, config, small_vocab, tasks=("CR",))
        assert set(report.task_mix) == {"CR"}

    def test_vocab_digest_mismatch(self, small_vocab):
        from chorebot.training import finetune

        model, datasets = self._tiny_setup(small_vocab)
        config = TrainConfig(steps=1, batch_size=2)
        with pytest.raises(ValueError, match="digest"):
            finetune(model, datasets, config, small_vocab, expected_vocab_digest="deadbeef")

    def test_teacher_forcing_causality(self, small_vocab):
        # a later target token must not influence earlier logits
        model, datasets = self._tiny_setup(small_vocab)
        sample = datasets["AE"].samples[0]
        batch = encode_batch([sample], small_vocab, model.config)
        base = model.forward(batch).data
        t = int(batch.target_mask[0].sum())
        batch.dec_in[0, t - 1] = (batch.dec_in[0, t - 1] + 3) % model.config.vocab_size
        changed = model.forward(batch).data
        np.testing.assert_allclose(base[0, : t - 1], changed[0, : t - 1], atol=1e-12)
        assert not np.allclose(base[0, t - 1], changed[0, t - 1])


class TestCRScoring:
    def test_all_correct(self):
        gold = ["<act><one match> mug", "<search><no match> box"]
        report = score_cr_texts(gold, list(gold))
        assert report.accuracy == 1.0
        assert report.macro_f1 == pytest.approx(100.0)

    def test_degenerate_constant_predictor(self):
        gold = ["<act><one match> x"] * 50 + ["<act><no match> x"] * 50
        pred = ["<act><one match> x"] * 100
        report = score_cr_texts(gold, pred)
        assert report.accuracy == pytest.approx(0.5)
        # hand-computed confusion: F1 = 2/3 for the predicted class, 0 for the other
        assert report.macro_f1 == pytest.approx(100 / 3, abs=1e-9)

    def test_unparseable_predictions_count_as_wrong(self):
        gold = ["<act><one match> mug"] * 4
        pred = ["gibberish"] * 4
        report = score_cr_texts(gold, pred)
        assert report.accuracy == 0.0
