"""Message schema for the interactive session protocol.

Every payload is JSON with a `kind` discriminator; server messages carry a
per-session strictly increasing sequence number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

PROTOCOL_VERSION = 1

SERVER_KINDS = (
    "sessionCreated",
    "observation",
    "crDecision",
    "actionExecuted",
    "clarificationRequest",
    "missionStatus",
    "error",
)
CLIENT_KINDS = ("createSession", "instruction", "clarificationAnswer", "reset", "loadMission")


@dataclass
class SessionMessage:
    kind: str
    session_id: str
    seq: int
    payload: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "v": PROTOCOL_VERSION,
            "kind": self.kind,
            "sessionId": self.session_id,
            "seq": self.seq,
            "payload": self.payload,
        }

    @staticmethod
    def from_json(doc: dict) -> "SessionMessage":
        return SessionMessage(
            kind=doc["kind"],
            session_id=doc.get("sessionId", ""),
            seq=doc.get("seq", 0),
            payload=doc.get("payload", {}),
        )


def observation_payload(record) -> dict:
    """Serialize a frame record for clients: detections with their tokens."""
    obs = record.observation
    return {
        "frameId": record.frame_id,
        "room": obs.room,
        "heading": obs.heading,
        "sceneDescriptor": obs.scene_descriptor,
        "detections": [
            {
                "token": region.token,
                "class": region.class_name,
                "color": region.color,
                "bbox": list(region.bbox),
                "objectId": region.object_id,
            }
            for region in record.frame_data.regions
        ],
    }


def map_scene_payload(world) -> dict:
    """Top-down scene snapshot for the console map pane."""
    return {
        "rooms": [
            {
                "name": room.name,
                "bounds": list(room.bounds),
                "viewpoints": [{"id": vp.id, "position": list(vp.position)} for vp in room.viewpoints],
            }
            for room in world.rooms
        ],
        "objects": [
            {
                "id": obj.id,
                "class": obj.class_name,
                "color": obj.color,
                "position": list(obj.state.position) if obj.state.position else None,
                "room": (world.room_of_object(oid).name if world.room_of_object(oid) else None),
            }
            for oid, obj in sorted(world.objects.items())
        ],
        "agent": agent_pose_payload(world),
        "inventory": world.inventory,
    }


def agent_pose_payload(world) -> dict:
    return {
        "room": world.agent.room,
        "position": list(world.agent.position),
        "heading": world.agent.heading,
    }
