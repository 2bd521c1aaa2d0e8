"""Oracle labeler: ground-truth routing and grounding over symbolic scenes."""

from __future__ import annotations

from typing import Optional

from ..agent.referents import match_count, matching_regions
from ..grammar import CRPrediction, Match, Route
from ..training.datasets import FrameData


def match_for_count(n: int) -> Match:
    if n == 0:
        return Match.NO_MATCH
    if n == 1:
        return Match.ONE_MATCH
    return Match.MULTIPLE_MATCHES


def oracle_cr(frame: FrameData, mention: Optional[str], is_search: bool) -> CRPrediction:
    """The ground-truth routing decision for an instruction whose referent is
    `mention` (None for room-level navigation) over the given frame."""
    route = Route.SEARCH if is_search else Route.ACT
    if mention is None:
        return CRPrediction(route, Match.ONE_MATCH, None)
    return CRPrediction(route, match_for_count(match_count(frame, mention)), mention)


def oracle_ground(frame: FrameData, mention: str) -> Optional[int]:
    """The visual token of the unique best match, or None when absent.

    Among multiple matches the largest bbox area wins (the nearest instance).
    """
    matches = matching_regions(frame, mention)
    if not matches:
        return None
    best = max(matches, key=lambda r: (r.bbox[2] - r.bbox[0]) * (r.bbox[3] - r.bbox[1]))
    return best.token
