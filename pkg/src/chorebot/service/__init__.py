"""Interactive session service: protocol, manager, server, replay."""

from .manager import ManagedSession, ServiceError, SessionManager
from .protocol import (
    CLIENT_KINDS,
    PROTOCOL_VERSION,
    SERVER_KINDS,
    SessionMessage,
    map_scene_payload,
    observation_payload,
)
from .server import make_app
from .trajectory import ReplayError, ReplayResult, export_trajectory, replay_trajectory
