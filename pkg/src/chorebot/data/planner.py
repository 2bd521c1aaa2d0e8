"""Privileged expert planner.

The expert knows the world state, so it scripts the shortest sensible action
sequence for each mission category: approach (teleport navigation plus facing
rotations), manipulate via the current frame's visual tokens, with container
opening and sink activation inserted where preconditions demand them. It
doubles as an upper-bound agent for the benchmark harness and as the source
of ground-truth trajectories for training data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..agent.runtime import ExecutedAction, InstructionOutcome, InstructionStatus, QAMode
from ..agent.session import FrameRecord, Session
from ..grammar.actions import ActionPhrase
from ..training.datasets import FrameData
from ..world import ActionCommand, ManipulationKind, NavigationKind, ObjectRef
from ..world.catalog import Affordance
from ..world.sim import INTERACTION_RADIUS, _facing_heading, _is_hidden
from .missions import CDFMission
from .oracle import oracle_cr

AbstractStep = tuple  # ("approach", oid) | ("manip", verb, oid) | ("ensure_on"/"ensure_open", oid)

VERB_TO_KIND = {
    "pickup": ManipulationKind.PICKUP,
    "place": ManipulationKind.PLACE,
    "open": ManipulationKind.OPEN,
    "close": ManipulationKind.CLOSE,
    "toggle": ManipulationKind.TOGGLE,
    "fill": ManipulationKind.FILL,
    "clean": ManipulationKind.CLEAN,
    "pour": ManipulationKind.POUR,
    "break": ManipulationKind.BREAK,
    "scan": ManipulationKind.SCAN,
}


class ExpertError(RuntimeError):
    pass


def expert_script(mission: CDFMission) -> list[list[AbstractStep]]:
    """Abstract per-instruction step lists, aligned with mission.instructions.

    Plans are generated alongside the instructions and shipped in the mission
    document, so the expert simply executes them.
    """
    return [[tuple(step) for step in spec.plan] for spec in mission.instructions]


@dataclass
class RecordedStep:
    """One generate-act step as the model would see it during training."""

    frames: tuple[FrameData, ...]
    phrase: ActionPhrase
    is_last: bool


@dataclass
class RecordedInstruction:
    instruction: str
    qa: Optional[tuple[str, str]]
    cr: str  # oracle routing target at instruction start
    steps: list[RecordedStep] = field(default_factory=list)
    target_object_id: Optional[str] = None


class ExpertAgent:
    """Runs mission segments through a session; mission-bound and stateful."""

    def __init__(self, mission: CDFMission, frame_window: int = 4):
        self.mission = mission
        self.script = expert_script(mission)
        self.cursor = 0
        self.frame_window = frame_window
        self.recorded: list[RecordedInstruction] = []

    # -- primitive routines ------------------------------------------------------

    def _exec(self, session: Session, cmd: ActionCommand, record: Optional[RecordedInstruction],
              phrase: Optional[ActionPhrase], outcome: InstructionOutcome) -> FrameRecord:
        if record is not None and phrase is not None:
            window = tuple(f.frame_data for f in session.frames[-self.frame_window:])
            record.steps.append(RecordedStep(frames=window, phrase=phrase, is_last=False))
        result, frame = session.execute(cmd)
        outcome.actions.append(ExecutedAction(cmd.to_json(), result.success, result.object_id))
        if not result.success:
            raise ExpertError(f"expert action failed: {cmd.to_json()} -> {result.to_json()}")
        return frame

    def _token_for(self, session: Session, object_id: str) -> tuple[int, int]:
        """(frame sentinel id, visual token) for the object in recent frames."""
        for record in reversed(session.frames[-self.frame_window:]):
            for token, oid in record.token_to_object.items():
                if oid == object_id:
                    return record.frame_id, token
        raise ExpertError(f"{object_id} not visible in the recent frames")

    def _approach(self, session: Session, object_id: str,
                  record: Optional[RecordedInstruction], outcome: InstructionOutcome) -> None:
        world = session.world
        obj = world.objects[object_id]
        if obj.state.position is None:
            return  # already held
        if _is_hidden(world, obj):
            container = world.objects[obj.state.contained_in]
            self._approach(session, container.id, record, outcome)
            self._manipulate(session, "open", container.id, record, outcome)
        room = world.room_of_object(object_id)
        if room is None:
            raise ExpertError(f"{object_id} is nowhere")
        if world.agent.room != room.name:
            phrase = ActionPhrase("goto", object_name=room.name)
            self._exec(session, ActionCommand(NavigationKind.GOTO, target=room.name),
                       record, phrase, outcome)
        self._face(session, object_id, record, outcome)
        obj = session.world.objects[object_id]
        import math

        if math.dist(session.world.agent.position, obj.state.position) >= INTERACTION_RADIUS * 0.95:
            fid, token = self._ensure_visible(session, object_id, record, outcome)
            phrase = ActionPhrase("goto", object_name=self._name(object_id),
                                  frame=fid, visual=token)
            self._exec(session, ActionCommand(NavigationKind.GOTO, ref=ObjectRef(fid, token)),
                       record, phrase, outcome)

    def _face(self, session: Session, object_id: str,
              record: Optional[RecordedInstruction], outcome: InstructionOutcome) -> None:
        obj = session.world.objects[object_id]
        desired = _facing_heading(session.world.agent.position, obj.state.position)
        diff = (desired - session.world.agent.heading) % 360
        steps = {0: [], 90: ["rotate left"], 180: ["rotate left", "rotate left"], 270: ["rotate right"]}[diff]
        for verb in steps:
            kind = NavigationKind.ROTATE_LEFT if verb == "rotate left" else NavigationKind.ROTATE_RIGHT
            self._exec(session, ActionCommand(kind), record, ActionPhrase(verb), outcome)

    def _ensure_visible(self, session: Session, object_id: str,
                        record: Optional[RecordedInstruction],
                        outcome: InstructionOutcome) -> tuple[int, int]:
        try:
            return self._token_for(session, object_id)
        except ExpertError:
            pass
        session.capture()
        try:
            return self._token_for(session, object_id)
        except ExpertError:
            self._face(session, object_id, record, outcome)
            session.capture()
            return self._token_for(session, object_id)

    def _name(self, object_id: str) -> str:
        obj = next(o for o in self.mission.layout["objects"] if o["id"] == object_id)
        return obj["class"]

    def _manipulate(self, session: Session, verb: str, object_id: str,
                    record: Optional[RecordedInstruction], outcome: InstructionOutcome) -> None:
        fid, token = self._ensure_visible(session, object_id, record, outcome)
        phrase = ActionPhrase(verb, object_name=self._name(object_id), frame=fid, visual=token)
        self._exec(session, ActionCommand(VERB_TO_KIND[verb], ref=ObjectRef(fid, token)),
                   record, phrase, outcome)
        if outcome.target_object_id is None:
            outcome.target_object_id = object_id

    # -- agent interface ------------------------------------------------------------

    def route(self, session: Session, instruction: str, qa=None):
        """Oracle routing for the current script segment."""
        mention = None
        if self.cursor < len(self.mission.instructions):
            spec = self.mission.instructions[self.cursor]
            if spec.target_object_id is not None:
                doc = next(o for o in self.mission.layout["objects"]
                           if o["id"] == spec.target_object_id)
                mention = doc["class"]
        return oracle_cr(session.current_frame().frame_data, mention, is_search=False)

    def dispatch(self, session: Session, instruction: str, qa, cr) -> InstructionOutcome:
        return self.run_instruction(session, instruction, qa, routed=cr)

    def run_instruction(
        self,
        session: Session,
        instruction: str,
        qa: Optional[tuple[str, str]] = None,
        qa_mode: QAMode = QAMode.NEVER,
        routed=None,
    ) -> InstructionOutcome:
        if self.cursor >= len(self.script):
            return InstructionOutcome(cr=None, qa_used=False, status=InstructionStatus.FAILED,
                                      error="no script segment left")
        spec = self.mission.instructions[self.cursor]
        cr = routed if routed is not None else self.route(session, instruction, qa)
        record = RecordedInstruction(
            instruction=instruction, qa=qa, cr=cr.render(),
            target_object_id=spec.target_object_id,
        )
        outcome = InstructionOutcome(cr=cr, qa_used=qa is not None)
        try:
            for step_spec in self.script[self.cursor]:
                kind = step_spec[0]
                if kind == "approach":
                    self._approach(session, step_spec[1], record, outcome)
                elif kind == "goto_room":
                    phrase = ActionPhrase("goto", object_name=step_spec[1])
                    self._exec(session, ActionCommand(NavigationKind.GOTO, target=step_spec[1]),
                               record, phrase, outcome)
                elif kind == "ensure_on":
                    if not session.world.objects[step_spec[1]].state.is_on:
                        self._manipulate(session, "toggle", step_spec[1], record, outcome)
                elif kind == "ensure_open":
                    target = session.world.objects[step_spec[1]]
                    if target.has(Affordance.OPENABLE) and not target.state.is_open:
                        self._manipulate(session, "open", step_spec[1], record, outcome)
                elif kind == "manip":
                    self._manipulate(session, step_spec[1], step_spec[2], record, outcome)
                else:
                    raise ExpertError(f"unknown abstract step {step_spec!r}")
        except ExpertError as err:
            outcome.status = InstructionStatus.FAILED
            outcome.error = str(err)
        if record.steps:
            record.steps[-1].is_last = True
        self.recorded.append(record)
        self.cursor += 1
        return outcome


def expert_solve(mission: CDFMission, seed: int = 0) -> tuple[bool, ExpertAgent, Session]:
    """Run the expert end to end on a fresh session; True iff the goal holds.

    A mission whose goal already holds yields an empty trajectory.
    """
    world = mission.build_world(seed=seed)
    session = Session(world, seed=seed, goal=mission.goal)
    agent = ExpertAgent(mission)
    if session.goal_reached():
        return True, agent, session
    for spec in mission.instructions:
        outcome = agent.run_instruction(session, spec.text, spec.qa.as_pair() if spec.qa else None)
        if outcome.status is not InstructionStatus.COMPLETED:
            return False, agent, session
    return session.goal_reached(), agent, session


def generate_missions(
    counts: dict[str, int],
    rng,
    qa_rate: float = 0.6,
    distractor_rate: float = 0.5,
    ambiguous: bool = False,
) -> list[CDFMission]:
    """Generate expert-solvable missions per category; failures are rejected
    and resampled, so every emitted mission carries its ground-truth action
    count. Deterministic for a given rng seed."""
    import random as _random

    from .missions import SUPPORTED_CATEGORIES, generate_mission

    if isinstance(rng, int):
        rng = _random.Random(rng)
    unsupported = set(counts) - set(SUPPORTED_CATEGORIES)
    if unsupported:
        raise ValueError(f"unsupported mission categories: {sorted(unsupported)}")
    missions: list[CDFMission] = []
    for category in sorted(counts):
        produced = 0
        attempts = 0
        while produced < counts[category]:
            attempts += 1
            if attempts > counts[category] * 30:
                raise RuntimeError(f"cannot generate solvable {category!r} missions")
            mission_id = f"{category}-{'amb-' if ambiguous else ''}{produced:04d}"
            mission = generate_mission(category, rng, mission_id,
                                       distractor_rate=distractor_rate, qa_rate=qa_rate,
                                       ambiguous=ambiguous)
            solved, _, session = expert_solve(mission)
            if not solved:
                continue
            mission.expert_actions = session.world.step_count
            missions.append(mission)
            produced += 1
    return missions
