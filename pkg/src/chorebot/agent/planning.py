"""Viewpoint selection for room search via greedy maximum coverage.

The agent's current position and the room's viewpoints form a disk graph;
greedy selection covers every node with as few sweep positions as possible.
The agent's own position always comes first in the plan.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..coverage import COVERAGE_RADIUS, disk_adjacency, greedy_max_coverage
from ..world.types import Room


@dataclass(frozen=True)
class SearchStop:
    viewpoint_id: Optional[str]  # None means the agent's original position
    position: tuple[float, float]


@dataclass(frozen=True)
class SearchPlan:
    stops: tuple[SearchStop, ...]

    def reordered_from(self, viewpoint_id: str) -> "SearchPlan":
        """Start the search at a memorized viewpoint, keeping the rest."""
        hit = [s for s in self.stops if s.viewpoint_id == viewpoint_id]
        if not hit:
            return self
        rest = [s for s in self.stops if s.viewpoint_id != viewpoint_id]
        return SearchPlan(tuple(hit + rest))

    def starting_at(self, viewpoint_id: str, position: tuple[float, float]) -> "SearchPlan":
        """Force the memorized viewpoint to be the first stop, inserting it
        when greedy selection skipped it."""
        if any(s.viewpoint_id == viewpoint_id for s in self.stops):
            return self.reordered_from(viewpoint_id)
        first = SearchStop(viewpoint_id=viewpoint_id, position=position)
        rest = [s for s in self.stops if s.position != position]
        return SearchPlan((first, *rest))


def plan_viewpoints(
    room: Room,
    origin: tuple[float, float],
    coverage_radius: float = COVERAGE_RADIUS,
) -> SearchPlan:
    """Greedy cover of origin + viewpoints; origin is visited first regardless."""
    viewpoints = sorted(room.viewpoints, key=lambda vp: vp.id)
    nodes = [origin] + [vp.position for vp in viewpoints]
    adj = disk_adjacency(nodes, coverage_radius)
    chosen = greedy_max_coverage(adj, preselected=[0], selectable=range(1, len(nodes)))
    stops = [SearchStop(viewpoint_id=None, position=origin)]
    seen_positions = {origin}
    for node in chosen:
        vp = viewpoints[node - 1]
        if vp.position in seen_positions:
            continue
        seen_positions.add(vp.position)
        stops.append(SearchStop(viewpoint_id=vp.id, position=vp.position))
    return SearchPlan(tuple(stops))
