"""Benchmark harness: mission suites in, MSR/NRA reports out.

Robot action counting rule (also stamped into every report): every simulator
step counts one action, a panoramic sweep counts four, failed actions count,
and the average runs over all episodes including failures.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from ..agent.runtime import InstructionStatus, QAMode
from ..agent.session import Session
from ..data.missions import CDFMission
from ..world import goal_satisfied

COUNTING_RULE = "1 per step; LookAround counts 4; failures count; NRA averages over all episodes"

AgentFactory = Callable[[CDFMission], object]


@dataclass
class InstructionRecord:
    text: str
    q_type: Optional[str]
    qa_used: bool
    status: str
    cr: Optional[str]
    resolved_object: Optional[str]
    gold_object: Optional[str]

    def localized(self) -> Optional[bool]:
        if self.gold_object is None:
            return None
        return self.resolved_object == self.gold_object

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "qType": self.q_type,
            "qaUsed": self.qa_used,
            "status": self.status,
            "cr": self.cr,
            "resolvedObject": self.resolved_object,
            "goldObject": self.gold_object,
        }

    @staticmethod
    def from_json(doc: dict) -> "InstructionRecord":
        return InstructionRecord(
            text=doc["text"], q_type=doc.get("qType"), qa_used=doc["qaUsed"],
            status=doc["status"], cr=doc.get("cr"),
            resolved_object=doc.get("resolvedObject"), gold_object=doc.get("goldObject"),
        )


@dataclass
class EpisodeResult:
    mission_id: str
    category: str
    success: bool
    robot_actions: int
    qa_mode: str
    instructions: list[InstructionRecord] = field(default_factory=list)
    error: Optional[str] = None
    expert_actions: int = 0

    def to_json(self) -> dict:
        return {
            "missionId": self.mission_id,
            "category": self.category,
            "success": self.success,
            "robotActions": self.robot_actions,
            "qaMode": self.qa_mode,
            "instructions": [i.to_json() for i in self.instructions],
            "error": self.error,
            "expertActions": self.expert_actions,
        }

    @staticmethod
    def from_json(doc: dict) -> "EpisodeResult":
        return EpisodeResult(
            mission_id=doc["missionId"], category=doc["category"], success=doc["success"],
            robot_actions=doc["robotActions"], qa_mode=doc["qaMode"],
            instructions=[InstructionRecord.from_json(i) for i in doc["instructions"]],
            error=doc.get("error"), expert_actions=doc.get("expertActions", 0),
        )


def run_episode(
    mission: CDFMission,
    agent_factory: AgentFactory,
    qa_mode: QAMode = QAMode.NEVER,
    seed: int = 0,
) -> EpisodeResult:
    """Fresh session per episode; agent crashes mark the episode failed."""
    result = EpisodeResult(
        mission_id=mission.mission_id, category=mission.category, success=False,
        robot_actions=0, qa_mode=qa_mode.value, expert_actions=mission.expert_actions,
    )
    world = mission.build_world(seed=seed)
    session = Session(world, seed=seed, goal=mission.goal)
    try:
        agent = agent_factory(mission)
        for spec in mission.instructions:
            qa = spec.qa.as_pair() if spec.qa else None
            outcome = agent.run_instruction(session, spec.text, qa, qa_mode)
            result.instructions.append(InstructionRecord(
                text=spec.text,
                q_type=spec.qa.q_type.value if spec.qa else None,
                qa_used=outcome.qa_used,
                status=outcome.status.value,
                cr=outcome.cr.render() if outcome.cr else None,
                resolved_object=outcome.target_object_id,
                gold_object=spec.target_object_id,
            ))
    except Exception as exc:  # noqa: BLE001 - agent crash -> failed episode, run continues
        result.error = f"{type(exc).__name__}: {exc}"
    result.success = goal_satisfied(session.world, mission.goal)
    result.robot_actions = session.world.step_count
    return result


@dataclass
class BenchmarkReport:
    msr: float
    nra: float
    episodes: int
    qa_mode: str
    per_category: dict[str, dict]
    per_question_type: dict[str, dict]
    config_digest: str
    counting_rule: str = COUNTING_RULE

    def to_json(self) -> dict:
        return {
            "msr": self.msr,
            "nra": self.nra,
            "episodes": self.episodes,
            "qaMode": self.qa_mode,
            "perCategory": self.per_category,
            "perQuestionType": self.per_question_type,
            "configDigest": self.config_digest,
            "countingRule": self.counting_rule,
        }


def compute_report(episodes: Sequence[EpisodeResult], qa_mode: str, digest: str = "") -> BenchmarkReport:
    """Pure function of the episode log: persist + reload reproduces it."""
    ordered = sorted(episodes, key=lambda e: e.mission_id)
    n = len(ordered)
    successes = sum(1 for e in ordered if e.success)
    msr = 100.0 * successes / n if n else 0.0
    nra = sum(e.robot_actions for e in ordered) / n if n else 0.0
    return BenchmarkReport(
        msr=round(msr, 2),
        nra=round(nra, 2),
        episodes=n,
        qa_mode=qa_mode,
        per_category=category_report(ordered),
        per_question_type=_qtype_accuracy(ordered),
        config_digest=digest,
    )


def run_benchmark(
    agent_factory: AgentFactory,
    missions: Sequence[CDFMission],
    qa_mode: QAMode = QAMode.NEVER,
    seed: int = 0,
) -> tuple[BenchmarkReport, list[EpisodeResult]]:
    episodes = [run_episode(m, agent_factory, qa_mode, seed) for m in missions]
    digest = hashlib.sha256(
        json.dumps([qa_mode.value, seed, [m.mission_id for m in missions]]).encode()
    ).hexdigest()[:12]
    return compute_report(episodes, qa_mode.value, digest), episodes


def category_report(episodes: Sequence[EpisodeResult]) -> dict[str, dict]:
    """Per-category MSR plus the mean ground-truth (expert) action count."""
    from ..data.missions import SUPPORTED_CATEGORIES

    table: dict[str, dict] = {}
    by_cat: dict[str, list[EpisodeResult]] = {}
    for episode in episodes:
        by_cat.setdefault(episode.category, []).append(episode)
    for category, eps in sorted(by_cat.items()):
        entry = {
            "episodes": len(eps),
            "msr": round(100.0 * sum(e.success for e in eps) / len(eps), 2),
            "meanExpertActions": round(sum(e.expert_actions for e in eps) / len(eps), 2),
        }
        if category not in SUPPORTED_CATEGORIES:
            entry["unsupported"] = True
        table[category] = entry
    return table


def _qtype_accuracy(episodes: Sequence[EpisodeResult]) -> dict[str, dict]:
    table: dict[str, dict] = {}
    for episode in episodes:
        for record in episode.instructions:
            if record.q_type is None or record.localized() is None:
                continue
            entry = table.setdefault(record.q_type, {"n": 0, "correct": 0})
            entry["n"] += 1
            entry["correct"] += int(record.localized())
    return {
        q: {"n": e["n"], "accuracy": round(100.0 * e["correct"] / e["n"], 2)}
        for q, e in sorted(table.items())
    }


def localization_by_question_type(
    episodes_with_qa: Sequence[EpisodeResult],
    episodes_without_qa: Sequence[EpisodeResult],
) -> dict[str, dict]:
    """Paired localization accuracy per question type plus the QA gain.

    Both runs must cover the same missions (seed-paired)."""
    ids_with = sorted(e.mission_id for e in episodes_with_qa)
    ids_without = sorted(e.mission_id for e in episodes_without_qa)
    if ids_with != ids_without:
        raise ValueError("paired runs must cover identical mission sets")
    with_table = _qtype_accuracy(episodes_with_qa)
    without_table = _qtype_accuracy(episodes_without_qa)
    out: dict[str, dict] = {}
    for q_type in sorted(set(with_table) | set(without_table)):
        acc_with = with_table.get(q_type, {}).get("accuracy", 0.0)
        acc_without = without_table.get(q_type, {}).get("accuracy", 0.0)
        out[q_type] = {
            "qa_off": acc_without,
            "qa_on": acc_with,
            "gain": round(acc_with - acc_without, 2),
        }
    return out


def save_episodes(episodes: Sequence[EpisodeResult], path: str | Path) -> None:
    with open(path, "w") as fh:
        for episode in episodes:
            fh.write(json.dumps(episode.to_json()) + "\n")


def load_episodes(path: str | Path) -> list[EpisodeResult]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(EpisodeResult.from_json(json.loads(line)))
    return out


def report_to_csv(report: BenchmarkReport, path: str | Path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerow(["msr", report.msr])
        writer.writerow(["nra", report.nra])
        writer.writerow(["episodes", report.episodes])
        writer.writerow([])
        writer.writerow(["category", "episodes", "msr", "mean_expert_actions"])
        for category, entry in report.per_category.items():
            writer.writerow([category, entry["episodes"], entry["msr"], entry["meanExpertActions"]])
