"""Acceptance criteria, one test per criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
complete. The trained-model battery (last two criteria) trains the desk-scale
model for three seeds and dominates the runtime.
"""

import math
import random
import time

import numpy as np
import pytest

import scipy.stats

from chorebot.agent import QAMode, plan_viewpoints
from chorebot.agent.oracle_policy import OraclePolicy
from chorebot.bench import run_benchmark
from chorebot.coverage import brute_force_best_coverage, coverage_of, greedy_max_coverage
from chorebot.data import (
    ExpertAgent,
    SUPPORTED_CATEGORIES,
    build_missions,
    gen_visual_augs,
    negativize,
    aug_to_task_samples,
)
from chorebot.data.pipeline import worlds_for_augs
from chorebot.grammar import (
    ActionParseError,
    ActionPhrase,
    CRParseError,
    CRPrediction,
    MANIPULATION_VERBS,
    Match,
    PRIMITIVE_VERBS,
    Route,
    STOP,
    parse_actions,
    parse_cr,
    serialize_actions,
)
from chorebot.model import ModelConfig, Seq2SeqModel, grad_check, sequence_loss
from chorebot.model import autodiff as ad
from chorebot.agent.runtime import expected_mission_success
from chorebot.recipe import RecipeConfig, evaluate_recipe, median, train_recipe
from chorebot.service import SessionManager, replay_trajectory
from chorebot.training import TaskDataset, TaskSample, compute_task_probs, mixture_probs, sample_mixed_batch
from chorebot.world.generate import generate_layout
from chorebot.world import load_layout


def criterion(name: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'}: {name}"
    if detail:
        line += f"  [{detail}]"
    print(line, flush=True)
    assert ok, line


# ---------------------------------------------------------------------------


def test_expert_planner_msr():
    """100% success on 200 generated missions across 8 categories, < 60 s."""
    t0 = time.time()
    missions = build_missions({c: 25 for c in SUPPORTED_CATEGORIES}, seed=101)
    report, episodes = run_benchmark(lambda m: ExpertAgent(m), missions, QAMode.NEVER, seed=0)
    elapsed = time.time() - t0
    criterion(
        "expert planner: MSR 100% on 200 missions in under 60 s",
        report.msr == 100.0 and len(episodes) == 200 and elapsed < 60.0,
        f"msr={report.msr} episodes={len(episodes)} runtime={elapsed:.1f}s nra={report.nra}",
    )


def _random_phrase(rng: random.Random) -> ActionPhrase:
    names = ["mug", "red mug", "cereal box", "desk", "green lamp", "sink", "vending machine"]
    kind = rng.randrange(4)
    if kind == 0:
        return ActionPhrase(rng.choice(MANIPULATION_VERBS), object_name=rng.choice(names),
                            frame=rng.randint(1, 64), visual=rng.randint(1, 36))
    if kind == 1:
        return ActionPhrase(rng.choice(PRIMITIVE_VERBS))
    if kind == 2:
        return ActionPhrase("goto", object_name=rng.choice(["office", "kitchen", "lab"]))
    return ActionPhrase("goto", object_name=rng.choice(names),
                        frame=rng.randint(1, 64), visual=rng.randint(1, 36))


def test_grammar_round_trip_and_totality():
    """Round-trip identity on 1e4 sequences; exhaustive routing classes;
    zero panics over 1e6 fuzzed strings."""
    rng = random.Random(7)
    for _ in range(10_000):
        phrases = [_random_phrase(rng) for _ in range(rng.randrange(6))]
        parsed, complete = parse_actions(serialize_actions(phrases))
        assert complete and parsed == phrases

    for route in Route:
        for match in Match:
            for name in (None, "mug", "cereal box"):
                pred = CRPrediction(route, match, name)
                assert parse_cr(pred.render()) == pred

    fragments = [
        "pickup", "goto", "place", "mug", "red", ".", STOP, "<frame_token_1>",
        "<visual_token_9>", "<act>", "<search>", "<no match>", "move", "forward",
        "<frame_token_99>", "<MASK>", "..", "<", ">", "office", "",
    ]
    panics = 0
    for i in range(1_000_000):
        k = i % 9
        text = " ".join(rng.choices(fragments, k=k))
        try:
            parse_actions(text)
        except ActionParseError:
            pass
        except Exception:
            panics += 1
        try:
            parse_cr(text)
        except CRParseError:
            pass
        except Exception:
            panics += 1
    criterion(
        "grammar: 1e4 round-trips, 6 routing classes, 1e6 fuzz without panics",
        panics == 0, f"panics={panics}",
    )


def test_sampling_formula_and_mixture():
    """Capped mixture exact on the reference case; empirical within 0.005."""
    probs = compute_task_probs([100, 300, 900], 3)
    exact = probs == [1 / 7, 3 / 7, 3 / 7]

    datasets = {
        task: TaskDataset(task, [TaskSample(task, "x", (), "y")] * n)
        for task, n in (("CR", 100), ("AE", 300), ("VG", 900))
    }
    table = mixture_probs(datasets, 3)
    draws = 1_000_000
    batch = sample_mixed_batch(datasets, table, draws, rng=42)
    counts = {t: 0 for t in datasets}
    for sample in batch:
        counts[sample.task_id] += 1
    deviations = {t: abs(counts[t] / draws - table[t]) for t in datasets}
    within = all(d < 0.005 for d in deviations.values())
    chi2 = scipy.stats.chisquare(
        [counts[t] for t in sorted(datasets)],
        [table[t] * draws for t in sorted(datasets)],
    )
    criterion(
        "sampling: probs exactly [1/7, 3/7, 3/7]; 1e6-draw mixture within 0.005",
        exact and within and chi2.pvalue > 0.01,
        f"exact={exact} max_dev={max(deviations.values()):.4f} chi2_p={chi2.pvalue:.3f}",
    )


def test_loss_normalization():
    """Uniform logits give ln|V| within 1e-9; padding invariance is exact."""
    logits = ad.constant(np.zeros((3, 5, 4)))
    targets = np.zeros((3, 5), dtype=np.int64)
    loss = sequence_loss(logits, targets, np.ones((3, 5)))
    uniform_ok = abs(float(loss.data) - math.log(4)) < 1e-9

    rng = np.random.default_rng(0)
    base_logits = rng.normal(size=(2, 4, 6))
    base_targets = rng.integers(0, 6, size=(2, 4))
    base = sequence_loss(ad.constant(base_logits), base_targets, np.ones((2, 4)))
    padded_logits = np.concatenate([base_logits, rng.normal(size=(2, 3, 6))], axis=1)
    padded_targets = np.concatenate([base_targets, rng.integers(0, 6, size=(2, 3))], axis=1)
    mask = np.concatenate([np.ones((2, 4)), np.zeros((2, 3))], axis=1)
    padded = sequence_loss(ad.constant(padded_logits), padded_targets, mask)
    padding_ok = float(base.data) == float(padded.data)
    criterion(
        "loss normalization: uniform-logit loss = ln|V| (1e-9); padding exact",
        uniform_ok and padding_ok,
        f"|loss-ln4|={abs(float(loss.data) - math.log(4)):.2e} padding_exact={padding_ok}",
    )


def test_gradient_check():
    """Analytic vs central differences < 1e-4, double precision, < 2 min."""
    from tests_helpers import make_model_batch

    t0 = time.time()
    config = ModelConfig(
        vocab_size=160, enc_layers=2, dec_layers=2, heads=2, d_model=16, d_ff=24,
        dropout=0.0, region_feature_dim=8, scene_feature_dim=10, max_frames=8,
    )
    model = Seq2SeqModel(config, seed=3)
    batch = make_model_batch(config, batch=2, seed=11)
    worst = grad_check(model, batch, eps=1e-5, num_coords=240, smoothing=0.1)
    elapsed = time.time() - t0
    criterion(
        "gradient check: max rel error < 1e-4 across all layer types, < 2 min",
        worst < 1e-4 and elapsed < 120,
        f"max_rel_err={worst:.2e} runtime={elapsed:.1f}s",
    )


def test_viewpoint_planner():
    """Greedy full cover with the (1-1/e) bound on 100 graphs; generated
    rooms need at most two viewpoints at radius 4."""
    rng = random.Random(5)
    bound = 1 - 1 / math.e
    quality_ok = True
    for _ in range(100):
        n = rng.randint(1, 7)
        adj = [set() for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.45:
                    adj[i].add(j)
                    adj[j].add(i)
        chosen = greedy_max_coverage(adj)
        if len(coverage_of(adj, chosen)) != n:
            quality_ok = False
        for budget in range(1, len(chosen) + 1):
            if len(coverage_of(adj, chosen[:budget])) < bound * brute_force_best_coverage(adj, budget) - 1e-9:
                quality_ok = False

    max_selected = 0
    for seed in range(20):
        world = load_layout(generate_layout(seed + 500))
        for room in world.rooms:
            for origin in [room.center] + [vp.position for vp in room.viewpoints]:
                plan = plan_viewpoints(room, origin, coverage_radius=4.0)
                max_selected = max(max_selected, len(plan.stops) - 1)
    criterion(
        "viewpoint planner: greedy covers all with (1-1/e) bound; <= 2 viewpoints at radius 4",
        quality_ok and max_selected <= 2,
        f"bound_ok={quality_ok} max_selected={max_selected}",
    )


def test_expected_mission_success_value():
    value = expected_mission_success(0.97, 5)
    criterion(
        "analysis op: expected mission success (0.97, 5) in [0.858, 0.859]",
        0.858 <= value <= 0.859 and expected_mission_success(1.0, 9) == 1.0
        and expected_mission_success(0.4, 0) == 1.0,
        f"value={value:.6f}",
    )


def test_negative_conversion_rate():
    """Conversion probability 0.50 +/- 0.01 over 1e5 samples."""
    worlds = worlds_for_augs(3, 5)
    augs, _ = gen_visual_augs(worlds, {"pickup": 40, "search": 20}, rng=5)
    base = []
    for aug in augs:
        base.extend(s for s in aug_to_task_samples(aug, 0) if s.task_id in ("CR", "VG"))
    pool = [s.frames[0] for s in base]
    rng = random.Random(99)
    converted = 0
    total = 100_000
    convertible = [s for s in base if negativize(s, 1.0, random.Random(0), pool) is not s]
    assert convertible, "fixture must contain convertible samples"
    for i in range(total):
        sample = convertible[i % len(convertible)]
        out = negativize(sample, 0.5, rng, pool)
        converted += out is not sample
    rate = converted / total
    criterion(
        "negative conversion rate 0.50 +/- 0.01 over 1e5 samples",
        abs(rate - 0.5) <= 0.01, f"rate={rate:.4f}",
    )


def test_replay_fidelity():
    """export -> replay reproduces the episode result and every digest."""
    missions = build_missions({"clean&deliver": 1, "pickup&deliver": 1}, seed=77)
    ok = True
    details = []
    for mission in missions:
        manager = SessionManager(lambda m: ExpertAgent(m) if m else OraclePolicy())
        managed, _ = manager.create_session(mission=mission, qa_mode="never", seed=3)
        for spec in mission.instructions:
            manager.post_instruction(managed.session_id, spec.text)
        document = manager.export(managed.session_id)
        result = replay_trajectory(document)
        same = (
            result.digests_match
            and result.success == managed.session.goal_reached()
            and result.robot_actions == managed.session.robot_actions
        )
        ok = ok and same
        details.append(f"{mission.category}: digests={result.digests_match} steps={result.steps}")
    criterion("replay fidelity: export -> replay bit-exact", ok, "; ".join(details))


# --------------------------------------------------------------------------
# trained-model battery (three seeds, medians)


@pytest.fixture(scope="module")
def trained_evaluations():
    results = []
    t0 = time.time()
    for seed in (0, 1, 2):
        config = RecipeConfig(seed=seed)
        artifacts = train_recipe(config)
        results.append(evaluate_recipe(config, artifacts))
        print(f"  seed {seed} done at {time.time() - t0:.0f}s: {results[-1].to_json()}", flush=True)
    elapsed = time.time() - t0
    return results, elapsed


def test_trained_model_battery(trained_evaluations):
    """3-seed medians: AE >= 90%, CR >= 0.90, MSR >= 60%, QA direction."""
    results, elapsed = trained_evaluations
    ae = median([r.ae_accuracy for r in results])
    cr = median([r.cr_accuracy for r in results])
    msr = median([r.msr_single_goal for r in results])
    qa_never = median([r.msr_ambiguous_qa_never for r in results])
    qa_always = median([r.msr_ambiguous_qa_always for r in results])
    criterion(
        "trained model: AE >= 0.90, CR >= 0.90, MSR >= 60, QA(always) >= QA(never), <= 45 min",
        ae >= 0.90 and cr >= 0.90 and msr >= 60.0 and qa_always >= qa_never and elapsed < 45 * 60,
        f"ae={ae:.3f} cr={cr:.3f} msr={msr:.1f} qa_never={qa_never:.1f} "
        f"qa_always={qa_always:.1f} runtime={elapsed / 60:.1f}min",
    )


def test_ablation_direction(trained_evaluations):
    """No-augmentation training never beats full augmentation (median)."""
    results, _ = trained_evaluations
    full = median([r.msr_single_goal for r in results])
    noaug = median([r.msr_noaug for r in results])
    criterion(
        "ablation direction: no-augmentation MSR <= full-augmentation MSR",
        noaug <= full, f"noaug={noaug:.1f} full={full:.1f}",
    )
