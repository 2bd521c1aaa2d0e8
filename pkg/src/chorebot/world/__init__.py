"""Symbolic multi-room household simulator."""

from .catalog import COLORS, OBJECT_CLASSES, ROOM_NAMES, Affordance, affordances_of, classes_with, nominal_size
from .layout import LayoutError, load_layout, save_layout
from .sim import (
    INTERACTION_RADIUS,
    MAX_DETECTIONS,
    ActionOutcome,
    ErrorKind,
    GoalEvaluationError,
    Violation,
    ViolationKind,
    capture,
    clone_world,
    goal_satisfied,
    interaction_allowed,
    look_around,
    observation_digest,
    render_observation,
    step,
)
from .types import (
    ActionCommand,
    AgentPose,
    Detection,
    DetectorNoise,
    GoalPredicate,
    ManipulationKind,
    MissionGoal,
    NavigationKind,
    ObjectInstance,
    ObjectRef,
    ObjectState,
    Observation,
    Room,
    Viewpoint,
    WorldState,
)
