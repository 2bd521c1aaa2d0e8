"""Trajectory export and exact replay.

The export is a self-contained JSONL document: a header holding the layout,
initial deltas, goal, seed, and token-shuffle flag, then one record per
logged step. Replay rebuilds the session from the header and re-executes
every command; because token assignment draws from the same seeded stream in
the same order, references resolve identically and every observation digest
must match bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from ..agent.session import Session
from ..world import ActionCommand, MissionGoal, NavigationKind, load_layout
from ..world.layout import save_layout


class ReplayError(ValueError):
    pass


def export_trajectory(
    session: Session,
    qa_mode: str = "never",
    mission_id: Optional[str] = None,
    initial_layout: Optional[dict] = None,
) -> str:
    """JSONL: header line, then session.log in order, then a result footer."""
    header = {
        "kind": "header",
        "schemaVersion": 1,
        "missionId": mission_id,
        "layout": initial_layout,
        "goal": session.goal.to_json() if session.goal else [],
        "seed": session.rng_seed,
        "shuffleTokens": session.shuffle_tokens,
        "qaMode": qa_mode,
    }
    lines = [json.dumps(header)]
    lines.extend(json.dumps(r.to_json()) for r in session.log)
    if session.log:
        lines.append(json.dumps({
            "kind": "result",
            "success": session.goal_reached(),
            "robotActions": session.robot_actions,
            "frames": session.world.frame_count,
        }))
    return "\n".join(lines) + "\n"


@dataclass
class ReplayResult:
    steps: int
    success: bool
    robot_actions: int
    digests_match: bool
    mismatches: list[int]


def replay_trajectory(document: str) -> ReplayResult:
    """Re-execute an exported trajectory and verify every digest."""
    lines = [json.loads(line) for line in document.splitlines() if line.strip()]
    if not lines or lines[0].get("kind") != "header":
        raise ReplayError("missing trajectory header")
    header = lines[0]
    if header.get("schemaVersion") != 1:
        raise ReplayError("unsupported trajectory schema version")
    if header.get("layout") is None:
        raise ReplayError("trajectory header carries no layout; cannot replay")
    world = load_layout(header["layout"], seed=header.get("seed", 0))
    goal_docs = header.get("goal") or []
    goal = MissionGoal.from_json(goal_docs) if goal_docs else None
    session = Session(
        world,
        seed=header.get("seed", 0),
        shuffle_tokens=header.get("shuffleTokens", False),
        goal=goal,
    )
    mismatches: list[int] = []
    steps = 0
    expected_result = None
    for i, doc in enumerate(lines[1:]):
        if doc.get("kind") == "result":
            expected_result = doc
            continue
        steps += 1
        command = doc["command"]
        if command.get("kind") == "Capture":
            record = session.capture()
        elif command.get("kind") == "LookAround":
            records = session.sweep()
            record = records[-1]
        else:
            _, record = session.execute(ActionCommand.from_json(command))
        replay_digest = session.log[-1].observation_digest
        if replay_digest != doc["observationDigest"]:
            mismatches.append(i)
    success = session.goal_reached()
    if expected_result is not None and bool(expected_result["success"]) != success:
        mismatches.append(-1)
    return ReplayResult(
        steps=steps,
        success=success,
        robot_actions=session.robot_actions,
        digests_match=not mismatches,
        mismatches=mismatches,
    )
