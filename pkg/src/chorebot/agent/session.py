"""A running episode: world, frame history with token maps, dialog, memory.

Frame sentinel ids wrap modulo the frame-token budget; the history keeps at
most that many records, evicting the oldest. Every executed command is
appended to the step log with its outcome and an observation digest, which is
what makes exported trajectories replayable bit-for-bit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from ..grammar import MAX_FRAME_TOKENS, assign_visual_tokens
from ..grammar.actions import ActionPhrase, MANIPULATION_VERBS
from ..training.datasets import FrameData
from ..training.pretrain_data import snapshot_frame
from ..world import (
    ActionCommand,
    ActionOutcome,
    ManipulationKind,
    MissionGoal,
    NavigationKind,
    ObjectRef,
    Observation,
    WorldState,
    goal_satisfied,
    look_around,
    observation_digest,
    render_observation,
    step,
)
from .memory import ObjectMemory

DEFAULT_STEP_BUDGET = 50


@dataclass(frozen=True)
class FrameRecord:
    frame_id: int  # sentinel id in [1, 64]
    observation: Observation
    frame_data: FrameData
    token_to_object: dict[int, str]


@dataclass
class StepRecord:
    step_index: int
    command: dict
    outcome: dict
    observation_digest: str

    def to_json(self) -> dict:
        return {
            "stepIndex": self.step_index,
            "command": self.command,
            "outcome": self.outcome,
            "observationDigest": self.observation_digest,
        }


PHRASE_TO_KIND = {
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
    "move forward": NavigationKind.MOVE_FORWARD,
    "move backward": NavigationKind.MOVE_BACKWARD,
    "rotate left": NavigationKind.ROTATE_LEFT,
    "rotate right": NavigationKind.ROTATE_RIGHT,
    "look around": NavigationKind.LOOK_AROUND,
}


def phrase_to_command(phrase: ActionPhrase) -> ActionCommand:
    if phrase.verb == "goto":
        if phrase.frame is not None:
            return ActionCommand(NavigationKind.GOTO, ref=ObjectRef(phrase.frame, phrase.visual))
        return ActionCommand(NavigationKind.GOTO, target=phrase.object_name)
    kind = PHRASE_TO_KIND[phrase.verb]
    if phrase.verb in MANIPULATION_VERBS:
        return ActionCommand(kind, ref=ObjectRef(phrase.frame, phrase.visual))
    return ActionCommand(kind)


class Session:
    def __init__(
        self,
        world: WorldState,
        seed: int = 0,
        shuffle_tokens: bool = False,
        step_budget: int = DEFAULT_STEP_BUDGET,
        goal: Optional[MissionGoal] = None,
    ):
        self.world = world
        self.rng_seed = seed
        self.rng = random.Random(seed)
        self.shuffle_tokens = shuffle_tokens
        self.step_budget = step_budget
        self.goal = goal
        self.frames: list[FrameRecord] = []
        self.memory = ObjectMemory()
        self.dialog: list[tuple[str, str]] = []
        self.log: list[StepRecord] = []
        self.listeners: list = []  # called with (command, outcome, frame_record)
        self._capture_internal()  # initial observation

    # -- observation management -----------------------------------------------

    @property
    def robot_actions(self) -> int:
        return self.world.step_count

    def current_frame(self) -> FrameRecord:
        return self.frames[-1]

    def _record_frame(self, obs: Observation) -> FrameRecord:
        frame_id = (obs.frame_index - 1) % MAX_FRAME_TOKENS + 1
        assignment = assign_visual_tokens(len(obs.detections), rng=self.rng, shuffle=self.shuffle_tokens)
        frame_data = snapshot_frame(self.world, obs, assignment, frame_id=frame_id)
        token_to_object = {
            assignment[i]: det.object_id for i, det in enumerate(obs.detections)
        }
        record = FrameRecord(frame_id, obs, frame_data, token_to_object)
        self.frames = [f for f in self.frames if f.frame_id != frame_id]
        self.frames.append(record)
        if len(self.frames) > MAX_FRAME_TOKENS:
            self.frames = self.frames[-MAX_FRAME_TOKENS:]
        return record

    def _capture_internal(self) -> FrameRecord:
        obs = render_observation(self.world)
        self.world.frame_count += 1
        return self._record_frame(obs)

    def capture(self) -> FrameRecord:
        """Extra observation outside the act-observe cycle; logged so that
        replay reproduces the frame (and token-assignment) sequence."""
        record = self._capture_internal()
        self.log.append(StepRecord(
            step_index=self.world.step_count,
            command={"kind": "Capture"},
            outcome=ActionOutcome(True).to_json(),
            observation_digest=observation_digest(record.observation),
        ))
        return record

    def sweep(self) -> list[FrameRecord]:
        """LookAround: four frames, step counter +4."""
        before = self.world.frame_count
        self.world, observations = look_around(self.world)
        records = []
        for i, obs in enumerate(observations):
            assert obs.frame_index == before + i + 1
            records.append(self._record_frame(obs))
        self.log.append(StepRecord(
            step_index=self.world.step_count,
            command=ActionCommand(NavigationKind.LOOK_AROUND).to_json(),
            outcome=ActionOutcome(True).to_json(),
            observation_digest=observation_digest(observations[-1]),
        ))
        for listener in self.listeners:
            listener(ActionCommand(NavigationKind.LOOK_AROUND), ActionOutcome(True), records[-1])
        return records

    # -- command execution ------------------------------------------------------

    def resolve(self, ref: ObjectRef) -> Optional[str]:
        for record in reversed(self.frames):
            if record.frame_id == ref.frame_index:
                return record.token_to_object.get(ref.visual_token)
        return None

    def execute(self, cmd: ActionCommand) -> tuple[ActionOutcome, FrameRecord]:
        """Step the world, log the step, and capture the next observation."""
        if cmd.kind is NavigationKind.LOOK_AROUND:
            records = self.sweep()
            return ActionOutcome(True), records[-1]
        self.world, outcome = step(self.world, cmd, self.resolve)
        record = self._capture_internal()
        self.log.append(StepRecord(
            step_index=self.world.step_count,
            command=cmd.to_json(),
            outcome=outcome.to_json(),
            observation_digest=observation_digest(record.observation),
        ))
        for listener in self.listeners:
            listener(cmd, outcome, record)
        return outcome, record

    # -- dialog & goal -----------------------------------------------------------

    def add_dialog(self, role: str, text: str) -> None:
        self.dialog.append((role, text))

    def goal_reached(self) -> bool:
        return self.goal is not None and goal_satisfied(self.world, self.goal)
