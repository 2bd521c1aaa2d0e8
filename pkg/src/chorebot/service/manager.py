"""Session lifecycle and the interactive decision protocol.

Each session runs one strictly sequential decision loop. An instruction
normally runs to completion; when interactive clarification is enabled and
routing reports an ambiguous referent, the loop pauses after routing, emits a
clarificationRequest, and resumes when the answer arrives.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..agent.runtime import InstructionStatus, Match, QAMode, Route
from ..agent.session import Session
from ..data.missions import CDFMission
from ..grammar import CRPrediction
from ..world import load_layout
from ..world.layout import save_layout
from .protocol import SessionMessage, agent_pose_payload, map_scene_payload, observation_payload

AgentFactory = Callable[[Optional[CDFMission]], object]


class ServiceError(ValueError):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


@dataclass
class ManagedSession:
    session_id: str
    session: Session
    agent: object
    qa_mode: QAMode
    interactive_qa: bool
    mission: Optional[CDFMission]
    layout: dict
    initial_layout: dict
    seed: int
    seq: int = 0
    busy: bool = False
    pending: Optional[dict] = None  # {"instruction", "cr", "question"}
    lock: threading.Lock = field(default_factory=threading.Lock)

    def next_seq(self) -> int:
        self.seq += 1
        return self.seq


class SessionManager:
    def __init__(self, agent_factory: AgentFactory):
        self.agent_factory = agent_factory
        self.sessions: dict[str, ManagedSession] = {}
        self._ids = itertools.count(1)

    # -- lifecycle -----------------------------------------------------------------

    def create_session(
        self,
        layout: Optional[dict] = None,
        mission: Optional[CDFMission] = None,
        qa_mode: str = "never",
        seed: int = 0,
    ) -> tuple[ManagedSession, list[SessionMessage]]:
        if mission is None and layout is None:
            raise ServiceError("badRequest", "createSession needs a layout or a mission")
        interactive = qa_mode == "interactive"
        mode = QAMode.NEVER if interactive else QAMode(qa_mode)
        if mission is not None:
            world = mission.build_world(seed=seed)
            layout_doc = mission.layout
            goal = mission.goal
        else:
            world = load_layout(layout, seed=seed)
            layout_doc = layout
            goal = None
        session = Session(world, seed=seed, goal=goal)
        managed = ManagedSession(
            session_id=f"s{next(self._ids)}",
            session=session,
            agent=self.agent_factory(mission),
            qa_mode=mode,
            interactive_qa=interactive,
            mission=mission,
            layout=layout_doc,
            initial_layout=save_layout(world),
            seed=seed,
        )
        self.sessions[managed.session_id] = managed
        messages = [
            self._message(managed, "sessionCreated", {
                "qaMode": qa_mode,
                "missionId": mission.mission_id if mission else None,
                "mapScene": map_scene_payload(session.world),
                "instructions": [i.to_json() for i in mission.instructions] if mission else [],
            }),
            self._observation_message(managed),
        ]
        return managed, messages

    def get(self, session_id: str) -> ManagedSession:
        managed = self.sessions.get(session_id)
        if managed is None:
            raise ServiceError("unknownSession", f"no session {session_id!r}")
        return managed

    def delete_session(self, session_id: str) -> None:
        self.get(session_id)
        del self.sessions[session_id]

    def list_sessions(self) -> list[dict]:
        return [
            {
                "sessionId": m.session_id,
                "qaMode": "interactive" if m.interactive_qa else m.qa_mode.value,
                "missionId": m.mission.mission_id if m.mission else None,
                "robotActions": m.session.robot_actions,
                "busy": m.busy,
                "awaitingClarification": m.pending is not None,
            }
            for m in self.sessions.values()
        ]

    # -- the protocol ----------------------------------------------------------------

    def post_instruction(self, session_id: str, text: str) -> list[SessionMessage]:
        managed = self.get(session_id)
        with managed.lock:
            if managed.busy or managed.pending is not None:
                return [self._error(managed, "busy", "an instruction is already in flight")]
            managed.busy = True
        try:
            return self._run_instruction(managed, text)
        finally:
            managed.busy = False

    def _run_instruction(self, managed: ManagedSession, text: str) -> list[SessionMessage]:
        messages: list[SessionMessage] = []
        agent = managed.agent
        session = managed.session
        try:
            cr: CRPrediction = agent.route(session, text, None)
        except Exception as exc:  # noqa: BLE001 - surfaced, session stays alive
            return [self._error(managed, "routingFailed", f"{type(exc).__name__}: {exc}")]
        messages.append(self._message(managed, "crDecision", {"cr": cr.render(), "instruction": text}))
        if (
            managed.interactive_qa
            and cr.route is Route.ACT
            and cr.match is Match.MULTIPLE_MATCHES
            and cr.object_name
        ):
            candidates = self._candidates(managed, cr.object_name)
            question = f"which {cr.object_name} do you mean?"
            managed.pending = {"instruction": text, "cr": cr, "question": question}
            messages.append(self._message(managed, "clarificationRequest", {
                "objectName": cr.object_name,
                "question": question,
                "reason": "multipleMatches",
                "candidates": candidates,
            }))
            return messages
        messages.extend(self._dispatch(managed, text, None, cr))
        return messages

    def post_clarification_answer(self, session_id: str, answer: str) -> list[SessionMessage]:
        managed = self.get(session_id)
        with managed.lock:
            if managed.pending is None:
                return [self._error(managed, "nothingPending", "no clarification was requested")]
            pending, managed.pending = managed.pending, None
            managed.busy = True
        try:
            qa = (pending["question"], answer)
            messages = self._dispatch(managed, pending["instruction"], qa, pending["cr"])
            return messages
        finally:
            managed.busy = False

    def _dispatch(self, managed: ManagedSession, text: str, qa, cr) -> list[SessionMessage]:
        messages: list[SessionMessage] = []
        session = managed.session

        def listener(cmd, outcome, record):
            messages.append(self._message(managed, "actionExecuted", {
                "command": cmd.to_json(),
                "outcome": outcome.to_json(),
                "agent": agent_pose_payload(session.world),
            }))
            messages.append(self._observation_message(managed))

        session.listeners.append(listener)
        try:
            outcome = managed.agent.dispatch(session, text, qa, cr)
        except Exception as exc:  # noqa: BLE001
            return messages + [self._error(managed, "instructionFailed", f"{type(exc).__name__}: {exc}")]
        finally:
            session.listeners.remove(listener)
        messages.append(self._message(managed, "missionStatus", {
            "status": outcome.status.value,
            "error": outcome.error,
            "goalReached": session.goal_reached(),
            "robotActions": session.robot_actions,
            "targetObjectId": outcome.target_object_id,
        }))
        return messages

    def reset(self, session_id: str) -> list[SessionMessage]:
        managed = self.get(session_id)
        world = (
            managed.mission.build_world(seed=managed.seed)
            if managed.mission
            else load_layout(managed.layout, seed=managed.seed)
        )
        managed.session = Session(world, seed=managed.seed,
                                  goal=managed.mission.goal if managed.mission else None)
        managed.agent = self.agent_factory(managed.mission)
        managed.pending = None
        return [
            self._message(managed, "sessionCreated", {
                "reset": True,
                "mapScene": map_scene_payload(managed.session.world),
            }),
            self._observation_message(managed),
        ]

    def export(self, session_id: str, qa_mode: Optional[str] = None) -> str:
        from .trajectory import export_trajectory

        managed = self.get(session_id)
        return export_trajectory(
            managed.session,
            qa_mode=qa_mode or ("interactive" if managed.interactive_qa else managed.qa_mode.value),
            mission_id=managed.mission.mission_id if managed.mission else None,
            initial_layout=managed.initial_layout,
        )

    # -- helpers -------------------------------------------------------------------

    def _candidates(self, managed: ManagedSession, object_name: str) -> list[dict]:
        from ..agent.referents import matching_regions

        frame = managed.session.current_frame()
        return [
            {"token": r.token, "class": r.class_name, "color": r.color, "bbox": list(r.bbox)}
            for r in matching_regions(frame.frame_data, object_name)
        ]

    def _observation_message(self, managed: ManagedSession) -> SessionMessage:
        payload = observation_payload(managed.session.current_frame())
        payload["agent"] = agent_pose_payload(managed.session.world)
        return self._message(managed, "observation", payload)

    def _message(self, managed: ManagedSession, kind: str, payload: dict) -> SessionMessage:
        return SessionMessage(kind=kind, session_id=managed.session_id,
                              seq=managed.next_seq(), payload=payload)

    def _error(self, managed: ManagedSession, code: str, message: str) -> SessionMessage:
        return self._message(managed, "error", {"code": code, "message": message})
