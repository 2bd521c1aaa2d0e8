import math
import random

import pytest

from chorebot.agent import (
    ObjectMemory,
    QAMode,
    SearchPlan,
    Session,
    expected_mission_success,
    phrase_to_command,
    plan_viewpoints,
)
from chorebot.agent.runtime import ModelAgent
from chorebot.coverage import (
    brute_force_best_coverage,
    coverage_of,
    disk_adjacency,
    greedy_max_coverage,
)
from chorebot.data.oracle import oracle_ground
from chorebot.grammar import ActionPhrase
from chorebot.world import ManipulationKind, NavigationKind, Room, Viewpoint, load_layout
from chorebot.world.generate import generate_layout

from conftest import TWO_ROOM_LAYOUT


class TestGreedyCoverage:
    def test_line_graph_center_is_unique_minimum(self):
        # nodes at 0, 6, 12 with radius 4: only the middle node covers all three
        positions = [(0.0, 0.0), (6.0, 0.0), (12.0, 0.0)]
        adj = disk_adjacency(positions, radius=4.0)
        chosen = greedy_max_coverage(adj)
        assert chosen == [1]
        # brute force: no single other node covers everything
        for node in (0, 2):
            assert len(coverage_of(adj, [node])) < 3

    def test_greedy_quality_bound_random_graphs(self):
        rng = random.Random(4)
        bound = 1 - 1 / math.e
        for _ in range(40):
            n = rng.randint(1, 7)
            adj = [set() for _ in range(n)]
            for i in range(n):
                for j in range(i + 1, n):
                    if rng.random() < 0.4:
                        adj[i].add(j)
                        adj[j].add(i)
            chosen = greedy_max_coverage(adj)
            assert len(coverage_of(adj, chosen)) == n  # full cover, always
            for budget in range(1, len(chosen) + 1):
                greedy_cov = len(coverage_of(adj, chosen[:budget]))
                optimum = brute_force_best_coverage(adj, budget)
                assert greedy_cov >= bound * optimum


def room_with_viewpoints(positions, bounds=(0, 0, 20, 10)):
    vps = [Viewpoint(id=f"vp{i}", position=p) for i, p in enumerate(positions)]
    return Room(name="hall", bounds=bounds, viewpoints=vps)


class TestPlanViewpoints:
    def test_origin_only_when_origin_covers_all(self):
        room = room_with_viewpoints([(1.0, 1.0), (2.0, 2.0)])
        plan = plan_viewpoints(room, origin=(1.5, 1.5))
        assert [s.viewpoint_id for s in plan.stops] == [None]

    def test_empty_viewpoint_list(self):
        room = room_with_viewpoints([])
        plan = plan_viewpoints(room, origin=(3.0, 3.0))
        assert len(plan.stops) == 1 and plan.stops[0].viewpoint_id is None

    def test_far_viewpoint_gets_selected(self):
        room = room_with_viewpoints([(18.0, 9.0)])
        plan = plan_viewpoints(room, origin=(1.0, 1.0))
        assert [s.viewpoint_id for s in plan.stops] == [None, "vp0"]

    def test_positions_unique_and_origin_first(self):
        room = room_with_viewpoints([(4.0, 4.0), (16.0, 8.0), (17.0, 9.0)])
        plan = plan_viewpoints(room, origin=(4.0, 4.0))
        positions = [s.position for s in plan.stops]
        assert len(set(positions)) == len(positions)
        assert plan.stops[0].viewpoint_id is None

    def test_reorder_from_memorized_viewpoint(self):
        room = room_with_viewpoints([(18.0, 9.0), (1.0, 9.0)], bounds=(0, 0, 30, 10))
        plan = plan_viewpoints(room, origin=(1.0, 1.0))
        reordered = plan.reordered_from("vp0")
        assert reordered.stops[0].viewpoint_id == "vp0"
        assert {s.viewpoint_id for s in reordered.stops} == {s.viewpoint_id for s in plan.stops}

    def test_generated_layouts_need_at_most_two_viewpoints(self):
        for seed in range(25):
            world = load_layout(generate_layout(seed))
            for room in world.rooms:
                for origin in [room.center] + [vp.position for vp in room.viewpoints]:
                    plan = plan_viewpoints(room, origin)
                    assert len(plan.stops) - 1 <= 2


class TestExpectedMissionSuccess:
    def test_paper_value(self):
        value = expected_mission_success(0.97, 5)
        assert 0.858 <= value <= 0.859

    def test_perfect_accuracy(self):
        assert expected_mission_success(1.0, 7) == 1.0

    def test_empty_mission(self):
        assert expected_mission_success(0.42, 0) == 1.0

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            expected_mission_success(1.2, 3)


class TestObjectMemory:
    def test_area_never_decreases(self):
        memory = ObjectMemory()
        memory.update("kitchen", "mug", 0.04, "vp0")
        memory.update("kitchen", "mug", 0.01, "vp1")
        entry = memory.lookup("kitchen", "mug")
        assert entry.area == 0.04 and entry.viewpoint == "vp0"
        memory.update("kitchen", "mug", 0.09, "vp1")
        assert memory.lookup("kitchen", "mug").viewpoint == "vp1"

    def test_ties_keep_existing(self):
        memory = ObjectMemory()
        memory.update("kitchen", "mug", 0.04, "vp0")
        memory.update("kitchen", "mug", 0.04, "vp1")
        assert memory.lookup("kitchen", "mug").viewpoint == "vp0"

    def test_one_entry_per_room_label(self):
        memory = ObjectMemory()
        memory.update("kitchen", "mug", 0.02, "vp0")
        memory.update("office", "mug", 0.03, "vp2")
        assert len(memory) == 2


class TestSession:
    def test_phrase_to_command_mapping(self):
        cmd = phrase_to_command(ActionPhrase("pickup", "mug", frame=2, visual=5))
        assert cmd.kind is ManipulationKind.PICKUP
        assert cmd.ref.frame_index == 2 and cmd.ref.visual_token == 5
        goto_room = phrase_to_command(ActionPhrase("goto", "office"))
        assert goto_room.kind is NavigationKind.GOTO and goto_room.target == "office"
        assert phrase_to_command(ActionPhrase("look around")).kind is NavigationKind.LOOK_AROUND

    def test_initial_capture_and_resolution(self):
        session = Session(load_layout(TWO_ROOM_LAYOUT, seed=1), seed=1)
        frame = session.current_frame()
        assert frame.frame_id == 1
        for token, oid in frame.token_to_object.items():
            from chorebot.world import ObjectRef

            assert session.resolve(ObjectRef(frame.frame_id, token)) == oid

    def test_stale_reference_resolves_to_none(self):
        from chorebot.world import ObjectRef

        session = Session(load_layout(TWO_ROOM_LAYOUT, seed=1), seed=1)
        assert session.resolve(ObjectRef(40, 12)) is None

    def test_sweep_adds_four_frames_and_counts_four_steps(self):
        session = Session(load_layout(TWO_ROOM_LAYOUT, seed=1), seed=1)
        before = session.robot_actions
        records = session.sweep()
        assert len(records) == 4
        assert session.robot_actions == before + 4

    def test_frame_history_wraps_at_sentinel_budget(self):
        from chorebot.grammar import MAX_FRAME_TOKENS

        session = Session(load_layout(TWO_ROOM_LAYOUT, seed=1), seed=1)
        for _ in range(MAX_FRAME_TOKENS + 10):
            session.capture()
        assert len(session.frames) <= MAX_FRAME_TOKENS
        ids = [f.frame_id for f in session.frames]
        assert len(set(ids)) == len(ids)


class OracleSearchAgent(ModelAgent):
    """Search loop with grounding replaced by the exact oracle."""

    def __init__(self):
        self.rng = random.Random(0)

    def ground(self, session, object_name, frame):
        token = oracle_ground(frame.frame_data, object_name)
        if token is not None and token in frame.token_to_object:
            return token
        return None


class TestSearchSoundness:
    def test_oracle_search_finds_every_reachable_object(self):
        from chorebot.agent.runtime import InstructionOutcome
        from chorebot.world.sim import _is_hidden

        for seed in (0, 3, 5):
            world = load_layout(generate_layout(seed), seed=seed)
            session = Session(world, seed=seed)
            agent = OracleSearchAgent()
            room = session.world.current_room()
            for oid in sorted(room.object_ids):
                obj = session.world.objects[oid]
                if obj.state.position is None or _is_hidden(session.world, obj):
                    continue
                outcome = InstructionOutcome(cr=None, qa_used=False)
                found = agent.search(session, obj.class_name, outcome)
                assert found is not None, f"search missed {oid} (seed {seed})"

    def test_object_inside_closed_cabinet_not_found(self):
        session = Session(load_layout(TWO_ROOM_LAYOUT, seed=2), seed=2)
        from chorebot.agent.runtime import InstructionOutcome

        agent = OracleSearchAgent()
        outcome = InstructionOutcome(cr=None, qa_used=False)
        assert agent.search(session, "milk carton", outcome) is None

    def test_memory_primes_search_start(self):
        world = load_layout(TWO_ROOM_LAYOUT, seed=2)
        session = Session(world, seed=2)
        agent = OracleSearchAgent()
        session.memory.update("kitchen", "mug", 0.2, "kitchen:vp1")
        from chorebot.agent.runtime import InstructionOutcome

        outcome = InstructionOutcome(cr=None, qa_used=False)
        found = agent.search(session, "mug", outcome)
        assert found is not None
        # the first navigation went to the memorized viewpoint
        goto_actions = [a.command for a in outcome.actions if a.command["kind"] == "GoTo"]
        assert goto_actions and goto_actions[0]["target"] == "kitchen:vp1"
        # memory was refreshed from the sweep
        assert session.memory.lookup("kitchen", "sink") is not None
