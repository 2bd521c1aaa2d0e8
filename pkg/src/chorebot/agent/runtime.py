"""The decision loop: route every instruction, then act or search.

Routing picks between action execution (the referent is at hand) and the
search routine (panoramic sweeps over greedily selected viewpoints with
object memory). Action execution generates one action text at a time over the
growing frame history, resolving frame/visual sentinel references against the
session's token maps.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from ..grammar import (
    ActionParseError,
    CRParseError,
    CRPrediction,
    Match,
    Route,
    Vocabulary,
    parse_actions,
    parse_cr,
    parse_visual_token,
)
from ..grammar.sentinels import ACT, MATCH_TOKENS, SEARCH
from ..model import Seq2SeqModel
from ..model.config import EncodedBatch
from ..model.generate import generate
from ..training.datasets import FrameData, TaskSample
from ..training.featurize import encode_batch
from ..world import ActionCommand, ErrorKind, NavigationKind
from .formats import QA, ae_input, cr_input, vg_input
from .planning import SearchPlan, plan_viewpoints
from .referents import split_referent
from .session import FrameRecord, Session, phrase_to_command

AE_FRAME_WINDOW = 4


class QAMode(str, Enum):
    NEVER = "never"
    ALWAYS = "always"
    ON_MULTIPLE_MATCHES = "cr"


class InstructionStatus(str, Enum):
    COMPLETED = "completed"
    NOT_FOUND = "notFound"
    FAILED = "failed"


@dataclass
class ExecutedAction:
    command: dict
    success: bool
    object_id: Optional[str] = None


@dataclass
class InstructionOutcome:
    cr: Optional[CRPrediction]
    qa_used: bool
    actions: list[ExecutedAction] = field(default_factory=list)
    status: InstructionStatus = InstructionStatus.COMPLETED
    error: Optional[str] = None
    target_object_id: Optional[str] = None  # what the agent resolved the referent to

    def to_json(self) -> dict:
        return {
            "cr": self.cr.render() if self.cr else None,
            "qaUsed": self.qa_used,
            "actions": [a.command for a in self.actions],
            "status": self.status.value,
            "error": self.error,
            "targetObjectId": self.target_object_id,
        }


@dataclass
class ModelBundle:
    """Which checkpoint answers each task; a unified agent shares one model."""

    vocab: Vocabulary
    route_model: Seq2SeqModel
    act_model: Seq2SeqModel
    ground_model: Seq2SeqModel

    @staticmethod
    def unified(vocab: Vocabulary, model: Seq2SeqModel) -> "ModelBundle":
        return ModelBundle(vocab, model, model, model)

    @staticmethod
    def modular(vocab: Vocabulary, route_model: Seq2SeqModel, act_model: Seq2SeqModel) -> "ModelBundle":
        return ModelBundle(vocab, route_model, act_model, act_model)


def expected_mission_success(per_instruction_accuracy: float, instruction_count: int) -> float:
    """Probability the whole mission succeeds if each instruction succeeds
    independently with the given accuracy."""
    if not 0.0 <= per_instruction_accuracy <= 1.0:
        raise ValueError("accuracy must be a probability")
    if instruction_count < 0:
        raise ValueError("instruction count must be non-negative")
    return per_instruction_accuracy**instruction_count


class ModelAgent:
    def __init__(self, bundle: ModelBundle, max_action_len: int = 24, seed: int = 0):
        self.bundle = bundle
        self.vocab = bundle.vocab
        self.max_action_len = max_action_len
        self.rng = random.Random(seed)

    # -- model plumbing ---------------------------------------------------------

    def _encode(self, model: Seq2SeqModel, text: str, frames: Sequence[FrameData]) -> EncodedBatch:
        sample = TaskSample("AE", text, tuple(frames), "x")
        return encode_batch([sample], self.vocab, model.config)

    def _generate(self, model: Seq2SeqModel, text: str, frames: Sequence[FrameData],
                  max_len: int, constraint=None) -> str:
        batch = self._encode(model, text, frames)
        return generate(model, self.vocab, batch, max_len=max_len, constraint=constraint).strip()

    # -- the three tasks ----------------------------------------------------------

    def route(self, session: Session, instruction: str, qa: Optional[QA]) -> CRPrediction:
        """Classify the instruction; retry once with structure-forced decoding."""
        text = cr_input(instruction, qa)
        frames = [session.current_frame().frame_data]
        raw = self._generate(self.bundle.route_model, text, frames, max_len=12)
        try:
            return parse_cr(raw)
        except CRParseError:
            pass
        route_ids = [self.vocab.sentinel_id(ACT), self.vocab.sentinel_id(SEARCH)]
        match_ids = [self.vocab.sentinel_id(t) for t in MATCH_TOKENS]
        reserved = self.vocab.reserved_ids

        def constrain(step: int, prefix: list[int]):
            if step == 0:
                return route_ids
            if step == 1:
                return match_ids
            return [i for i in range(self.vocab.size) if i not in reserved or i in (
                self.vocab.sentinel_id("<eos>"),
            )]

        raw = self._generate(self.bundle.route_model, text, frames, max_len=12, constraint=constrain)
        return parse_cr(raw)  # still malformed -> surface the structured error

    def ground(self, session: Session, object_name: str, frame: FrameRecord) -> Optional[int]:
        """Visual grounding on one frame: a visual token id, or None.

        Visual sentinels absent from the frame are banned outright, so the
        model can only point at regions that actually exist."""
        from ..grammar.sentinels import VISUAL_TOKEN_VOCAB_IDS

        present = set(frame.token_to_object)
        banned = [vid for j, vid in enumerate(VISUAL_TOKEN_VOCAB_IDS, start=1) if j not in present]
        batch = self._encode(self.bundle.ground_model, vg_input(object_name), [frame.frame_data])
        raw = generate(self.bundle.ground_model, self.vocab, batch,
                       banned_ids=banned, max_len=6).strip()
        token = parse_visual_token(raw)
        if token is not None and token in frame.token_to_object:
            return token
        return None

    def execute(self, session: Session, instruction: str, qa: Optional[QA],
                outcome: InstructionOutcome) -> None:
        """Generate-act loop until the model emits the stop sentinel."""
        text = ae_input(instruction, qa)
        start_steps = session.world.step_count
        while session.world.step_count - start_steps < session.step_budget:
            frames = [f.frame_data for f in session.frames[-AE_FRAME_WINDOW:]]
            raw = self._generate(self.bundle.act_model, text, frames, max_len=self.max_action_len)
            try:
                phrases, complete = parse_actions(raw, require_stop=False)
            except ActionParseError as err:
                outcome.status = InstructionStatus.FAILED
                outcome.error = f"unparseable action text: {err}"
                return
            if not phrases and not complete:
                outcome.status = InstructionStatus.FAILED
                outcome.error = "action generation produced neither actions nor stop"
                return
            for phrase in phrases:
                command = phrase_to_command(phrase)
                result, _ = session.execute(command)
                executed = ExecutedAction(command.to_json(), result.success, result.object_id)
                outcome.actions.append(executed)
                if result.object_id and outcome.target_object_id is None and (
                    command.kind is not NavigationKind.GOTO or phrase.frame is not None
                ):
                    outcome.target_object_id = result.object_id
                if not result.success and result.error is ErrorKind.UNRESOLVED_REFERENCE:
                    outcome.status = InstructionStatus.FAILED
                    outcome.error = "unresolved frame/visual reference"
                    return
            if complete:
                return
        outcome.status = InstructionStatus.FAILED
        outcome.error = "step budget exhausted"

    def search(self, session: Session, object_name: str,
               outcome: InstructionOutcome) -> Optional[tuple[FrameRecord, int]]:
        """Sweep planned viewpoints until grounding hits; feed object memory."""
        room = session.world.current_room()
        plan: SearchPlan = plan_viewpoints(room, session.world.agent.position)
        _, cls = split_referent(object_name)
        remembered = session.memory.lookup(room.name, cls)
        if remembered is not None:
            vp = next((v for v in room.viewpoints if v.id == remembered.viewpoint), None)
            if vp is not None:
                plan = plan.starting_at(vp.id, vp.position)
        for stop in plan.stops:
            if stop.viewpoint_id is not None:
                command = ActionCommand(NavigationKind.GOTO, target=stop.viewpoint_id)
                result, _ = session.execute(command)
                outcome.actions.append(ExecutedAction(command.to_json(), result.success))
                if not result.success:
                    continue
            records = session.sweep()
            outcome.actions.append(ExecutedAction(
                ActionCommand(NavigationKind.LOOK_AROUND).to_json(), True))
            self._update_memory(session, records, stop.viewpoint_id)
            for record in records:
                token = self.ground(session, object_name, record)
                if token is not None:
                    outcome.target_object_id = record.token_to_object.get(token)
                    return record, token
        return None

    def _update_memory(self, session: Session, records: list[FrameRecord],
                       viewpoint_id: Optional[str]) -> None:
        room = session.world.current_room()
        if viewpoint_id is None:
            viewpoint_id = _closest_viewpoint(room, session.world.agent.position)
            if viewpoint_id is None:
                return
        for record in records:
            for det in record.observation.detections:
                session.memory.update(room.name, det.class_label, det.area, viewpoint_id)

    # -- dispatch ------------------------------------------------------------------

    def dispatch(self, session: Session, instruction: str, qa: Optional[QA],
                 cr: CRPrediction) -> InstructionOutcome:
        """Act on a routing decision: act -> execute; search or act-without-a-
        match -> search first, then execute once found."""
        outcome = InstructionOutcome(cr=cr, qa_used=qa is not None)
        session.add_dialog("instruction", instruction)
        if cr.route is Route.ACT and cr.match in (Match.ONE_MATCH, Match.MULTIPLE_MATCHES):
            self.execute(session, instruction, qa, outcome)
        elif cr.object_name is None:
            outcome.status = InstructionStatus.FAILED
            outcome.error = "search routing without an object name"
        else:
            found = self.search(session, cr.object_name, outcome)
            if found is None:
                outcome.status = InstructionStatus.NOT_FOUND
            elif cr.route is Route.ACT:
                # the referent was out of view; face it, then act on it
                self._face_heading(session, found[0].observation.heading, outcome)
                self.execute(session, instruction, qa, outcome)
        return outcome

    def _face_heading(self, session: Session, heading: int, outcome: InstructionOutcome) -> None:
        """Rotate until the agent faces the heading a frame was captured at."""
        diff = (heading - session.world.agent.heading) % 360
        kinds = {90: [NavigationKind.ROTATE_LEFT],
                 180: [NavigationKind.ROTATE_LEFT] * 2,
                 270: [NavigationKind.ROTATE_RIGHT]}.get(diff, [])
        for kind in kinds:
            command = ActionCommand(kind)
            result, _ = session.execute(command)
            outcome.actions.append(ExecutedAction(command.to_json(), result.success))

    def run_instruction(
        self,
        session: Session,
        instruction: str,
        qa: Optional[QA] = None,
        qa_mode: QAMode = QAMode.NEVER,
    ) -> InstructionOutcome:
        """Route, then dispatch to execution or search per the routing rule."""
        qa_used: Optional[QA] = qa if (qa_mode is QAMode.ALWAYS and qa is not None) else None
        cr = self.route(session, instruction, qa_used)
        if (
            qa_mode is QAMode.ON_MULTIPLE_MATCHES
            and qa is not None
            and cr.match is Match.MULTIPLE_MATCHES
        ):
            qa_used = qa
            cr = self.route(session, instruction, qa_used)
        return self.dispatch(session, instruction, qa_used, cr)


def _closest_viewpoint(room, position) -> Optional[str]:
    import math

    if not room.viewpoints:
        return None
    return min(room.viewpoints, key=lambda vp: math.dist(vp.position, position)).id
