"""Greedy maximum-coverage selection over viewpoint disk graphs.

Positions become nodes; an edge joins two nodes whose coverage disks overlap
(strictly closer than twice the radius). Selecting a node covers it and its
neighbors; the greedy rule repeatedly takes the node that covers the most
still-uncovered nodes, breaking ties toward the lowest index.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Optional, Sequence

Position = tuple[float, float]

COVERAGE_RADIUS = 4.0


def disk_adjacency(positions: Sequence[Position], radius: float = COVERAGE_RADIUS) -> list[set[int]]:
    n = len(positions)
    adj: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if math.dist(positions[i], positions[j]) < 2.0 * radius:
                adj[i].add(j)
                adj[j].add(i)
    return adj


def coverage_of(adj: Sequence[set[int]], selected: Sequence[int]) -> set[int]:
    covered: set[int] = set()
    for node in selected:
        covered.add(node)
        covered.update(adj[node])
    return covered


def greedy_max_coverage(
    adj: Sequence[set[int]],
    budget: Optional[int] = None,
    preselected: Sequence[int] = (),
    selectable: Optional[Sequence[int]] = None,
) -> list[int]:
    """Selection order of greedy max coverage until all nodes are covered
    (or the budget runs out). `preselected` nodes count as already chosen;
    `selectable` restricts which nodes may be picked."""
    n = len(adj)
    pool = list(range(n)) if selectable is None else list(selectable)
    covered = coverage_of(adj, preselected)
    chosen: list[int] = []
    while len(covered) < n and (budget is None or len(chosen) < budget):
        best_node = -1
        best_gain = 0
        for node in pool:
            if node in chosen:
                continue
            gain = len(({node} | adj[node]) - covered)
            if gain > best_gain:
                best_gain, best_node = gain, node
        if best_node < 0:
            break  # remaining nodes are unreachable from the selectable pool
        chosen.append(best_node)
        covered.add(best_node)
        covered.update(adj[best_node])
    return chosen


def brute_force_best_coverage(adj: Sequence[set[int]], budget: int) -> int:
    """Exact optimum: the most nodes coverable with `budget` selections."""
    n = len(adj)
    if budget >= n:
        return n
    best = 0
    for subset in combinations(range(n), budget):
        best = max(best, len(coverage_of(adj, subset)))
    return best
