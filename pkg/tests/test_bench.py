import pytest

from chorebot.agent import QAMode, Session
from chorebot.bench import (
    EpisodeResult,
    InstructionRecord,
    category_report,
    compute_report,
    downsample_ae,
    load_episodes,
    localization_by_question_type,
    run_benchmark,
    save_episodes,
    write_curve,
)
from chorebot.data import ExpertAgent, build_missions
from chorebot.training import TaskDataset, TaskSample
from chorebot.world import ActionCommand, ManipulationKind, NavigationKind, ObjectRef, load_layout

from conftest import TWO_ROOM_LAYOUT


def episode(mission_id, category, success, actions, q_type=None, localized=None, expert=4):
    records = []
    if q_type is not None:
        records.append(InstructionRecord(
            text="x", q_type=q_type, qa_used=True, status="completed", cr=None,
            resolved_object="obj_0" if localized else "obj_1", gold_object="obj_0",
        ))
    return EpisodeResult(
        mission_id=mission_id, category=category, success=success,
        robot_actions=actions, qa_mode="never", instructions=records, expert_actions=expert,
    )


class TestReports:
    def test_msr_simple_arithmetic(self):
        report = compute_report([episode("a", "toggleDevice", True, 3),
                                 episode("b", "toggleDevice", False, 5)], "never")
        assert report.msr == 50.0
        assert report.nra == 4.0

    def test_category_mean_expert_lengths(self):
        eps = [episode("a", "x", True, 1, expert=4), episode("b", "x", True, 1, expert=4),
               episode("c", "x", False, 1, expert=8)]
        table = category_report(eps)
        assert table["x"]["meanExpertActions"] == pytest.approx(5.33, abs=0.01)
        assert table["x"]["unsupported"] is True

    def test_report_pure_function_of_persisted_log(self, tmp_path):
        eps = [episode("a", "toggleDevice", True, 3, q_type="description", localized=True),
               episode("b", "scanObject", False, 9, q_type="reference", localized=False)]
        report = compute_report(eps, "never", digest="d1")
        path = tmp_path / "episodes.jsonl"
        save_episodes(eps, path)
        reloaded = compute_report(load_episodes(path), "never", digest="d1")
        assert reloaded.to_json() == report.to_json()

    def test_localization_gain_zero_for_identical_behavior(self):
        eps = [episode("a", "c", True, 2, q_type="description", localized=True)]
        table = localization_by_question_type(eps, eps)
        assert table["description"]["gain"] == 0.0

    def test_localization_hand_fixture(self):
        with_qa = [
            episode("a", "c", True, 1, q_type="description", localized=True),
            episode("b", "c", True, 1, q_type="description", localized=True),
            episode("c", "c", True, 1, q_type="reference", localized=True),
            episode("d", "c", True, 1, q_type="reference", localized=False),
        ]
        without_qa = [
            episode("a", "c", True, 1, q_type="description", localized=True),
            episode("b", "c", True, 1, q_type="description", localized=False),
            episode("c", "c", True, 1, q_type="reference", localized=False),
            episode("d", "c", True, 1, q_type="reference", localized=False),
        ]
        table = localization_by_question_type(with_qa, without_qa)
        assert table["description"]["qa_off"] == 50.0
        assert table["description"]["qa_on"] == 100.0
        assert table["description"]["gain"] == 50.0
        assert table["reference"]["gain"] == 50.0

    def test_unpaired_runs_rejected(self):
        with pytest.raises(ValueError):
            localization_by_question_type(
                [episode("a", "c", True, 1)], [episode("b", "c", True, 1)]
            )


class TestExpertBenchmark:
    def test_expert_scores_perfectly_on_small_suite(self):
        missions = build_missions({c: 2 for c in (
            "pickup&deliver", "toggleDevice", "scanObject", "pourContainer")}, seed=12)
        report, episodes = run_benchmark(
            lambda mission: ExpertAgent(mission), missions, QAMode.NEVER, seed=0
        )
        assert report.msr == 100.0
        assert all(e.success for e in episodes)
        assert report.nra > 0

    def test_nra_equals_hand_counted_actions(self):
        # scripted 7-action episode: goto + sweep (4) + rotate + pickup
        session = Session(load_layout(TWO_ROOM_LAYOUT, seed=0), seed=0)
        session.execute(ActionCommand(NavigationKind.GOTO, target="kitchen:vp0"))
        session.execute(ActionCommand(NavigationKind.LOOK_AROUND))
        session.execute(ActionCommand(NavigationKind.ROTATE_LEFT))
        session.execute(ActionCommand(ManipulationKind.PICKUP, ref=ObjectRef(1, 1)),)
        assert session.robot_actions == 7

    def test_agent_crash_marks_episode_failed_and_run_continues(self):
        missions = build_missions({"toggleDevice": 2}, seed=13)

        class ExplodingAgent:
            def run_instruction(self, *args, **kwargs):
                raise RuntimeError("boom")

        report, episodes = run_benchmark(lambda m: ExplodingAgent(), missions, QAMode.NEVER)
        assert report.msr == 0.0
        assert all(e.error and "boom" in e.error for e in episodes)


class TestAblationTools:
    def _datasets(self):
        def mk(task, n):
            return TaskDataset(task, [TaskSample(task, f"in{i}", (), "t") for i in range(n)])

        return {"AE": mk("AE", 100), "VG": mk("VG", 40), "CR": mk("CR", 40)}

    def test_downsample_keeps_grounding(self):
        out = downsample_ae(self._datasets(), 0.25, keep_grounding=True, seed=0)
        assert out["AE"].count == 25
        assert out["VG"].count == 40 and out["CR"].count == 40

    def test_downsample_fraction_validation(self):
        with pytest.raises(ValueError):
            downsample_ae(self._datasets(), 0.0, keep_grounding=True)

    def test_fraction_one_is_identity(self):
        data = self._datasets()
        out = downsample_ae(data, 1.0, keep_grounding=True)
        assert out["AE"].count == 100

    def test_curve_csv_format(self, tmp_path):
        rows = [{"fraction": 0.5, "msr": 55.0, "seed": 0}, {"fraction": 1.0, "msr": 60.0, "seed": 0}]
        path = tmp_path / "curve.csv"
        write_curve(rows, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "fraction,msr,seed"
        assert len(lines) == 3
