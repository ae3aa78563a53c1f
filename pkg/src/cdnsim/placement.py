"""Server placement: priority-weighted k-center heuristics and exact baseline.

The placement objective is lexicographic: first minimize the maximum of
priority * distance(user, closest server), then the average. Every algorithm
breaks ties by node id, so identical inputs always give identical placements.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleError, ValidationError
from .profiles import UserGroup
from .topology import DistanceMatrix, NodeId, Topology

Placement = tuple[NodeId, ...]
Assignment = dict[NodeId, NodeId]  # user node -> server node

BRUTE_FORCE_LIMIT = 10_000_000


class PlacementObjective(NamedTuple):
    """Priority-weighted distance objective; compares lexicographically."""

    max_dist: float
    avg_dist: float


class MoveRecord(NamedTuple):
    """One accepted local-search move."""

    iteration: int
    server: int
    from_node: NodeId
    to_node: NodeId
    max_dist: float
    avg_dist: float


class _Eval:
    """Vectorized objective evaluation for a fixed user population."""

    def __init__(self, dm: DistanceMatrix, users: list[UserGroup]):
        self.dm = dm
        self.users = sorted(users, key=lambda u: u.node)
        self.rows = np.array([dm.index(u.node) for u in self.users])
        self.prios = np.array([u.priority for u in self.users])

    def weighted(self, servers: Placement) -> np.ndarray:
        cols = [self.dm.index(s) for s in servers]
        sub = self.dm.matrix[np.ix_(self.rows, cols)]
        return self.prios * sub.min(axis=1)

    def objective(self, servers: Placement) -> PlacementObjective:
        w = self.weighted(servers)
        return PlacementObjective(float(w.max()), float(w.mean()))


def _check_k(k: int, n: int):
    if not 1 <= k <= n:
        raise InfeasibleError(f"k={k} out of range 1..{n}")


def _resolve_sites(dm: DistanceMatrix, sites: tuple[NodeId, ...] | None) -> tuple[NodeId, ...]:
    if sites is None:
        return dm.ids
    unknown = sorted(set(sites) - set(dm.ids))
    if unknown:
        raise ValidationError(f"unknown candidate sites: {unknown[:5]}")
    return tuple(sorted(set(sites)))


def closest_assignment(
    dm: DistanceMatrix, users: list[UserGroup], placement: Placement
) -> Assignment:
    """Map each user to its nearest server; distance ties go to the lower id."""
    if not placement:
        raise ValidationError("empty placement")
    servers = sorted(placement)
    cols = [dm.index(s) for s in servers]
    out: Assignment = {}
    for u in users:
        row = dm.matrix[dm.index(u.node), cols]
        out[u.node] = servers[int(np.argmin(row))]  # argmin takes first == lowest id
    return out


def evaluate_placement(
    dm: DistanceMatrix, users: list[UserGroup], placement: Placement
) -> PlacementObjective:
    """Objective of a placement under closest assignment."""
    if not placement:
        raise ValidationError("empty placement")
    return _Eval(dm, users).objective(tuple(placement))


def one_center(
    dm: DistanceMatrix,
    users: list[UserGroup],
    candidates: tuple[NodeId, ...] | None = None,
) -> NodeId:
    """Exhaustive single-server optimum over all candidate nodes."""
    if candidates is None:
        candidates = dm.ids
    if not candidates:
        raise ValidationError("no candidate nodes")
    ev = _Eval(dm, users)
    weighted = ev.prios[:, None] * dm.matrix[np.ix_(ev.rows, [dm.index(c) for c in candidates])]
    maxs = weighted.max(axis=0)
    avgs = weighted.mean(axis=0)
    best = min(range(len(candidates)), key=lambda i: (maxs[i], avgs[i], candidates[i]))
    return candidates[best]


def farthest_first_init(
    dm: DistanceMatrix,
    users: list[UserGroup],
    k: int,
    sites: tuple[NodeId, ...] | None = None,
) -> Placement:
    """Deterministic farthest-first (2-Approx) start.

    An orientation mark at the 1-center picks the first server (the site
    farthest from the mark); each further server goes to the site with the
    largest distance to its closest already-placed server. Candidate
    distances here are raw node distances, not priority-weighted. `sites`
    restricts the allowed server locations (default: every node).
    """
    ids = _resolve_sites(dm, sites)
    _check_k(k, len(ids))
    mark = one_center(dm, users, candidates=ids)
    placed: list[NodeId] = []
    # distance from every site to the current server set; start from the mark
    cols = [dm.index(i) for i in ids]
    dist_to_set = dm.matrix[cols, dm.index(mark)].copy()
    for _ in range(k):
        best_i = None
        for i, node in enumerate(ids):
            if node in placed:
                continue
            if best_i is None or dist_to_set[i] > dist_to_set[best_i]:
                best_i = i  # id order: later equal distances never replace
        placed.append(ids[best_i])
        dist_to_set = np.minimum(dist_to_set, dm.matrix[cols, dm.index(ids[best_i])])
    return tuple(sorted(placed))


def dragoon(
    dm: DistanceMatrix,
    topo: Topology,
    users: list[UserGroup],
    k: int,
    sites: tuple[NodeId, ...] | None = None,
) -> tuple[Placement, PlacementObjective, list[MoveRecord]]:
    """Farthest-first initialization plus neighbor-move local search.

    Each iteration visits the servers in node-id order; a server may shift to
    its best directly-connected neighbor if that strictly improves the
    (max, avg) objective, at most once per iteration. Stops when an iteration
    moves nothing. The objective never worsens, so termination is guaranteed.
    With `sites`, both the initialization and every move stay on the allowed
    locations.
    """
    allowed = set(_resolve_sites(dm, sites))
    ev = _Eval(dm, users)
    placement = set(farthest_first_init(dm, users, k, sites))
    current = ev.objective(tuple(placement))
    log: list[MoveRecord] = []
    iteration = 0
    while True:
        iteration += 1
        moved = False
        for idx, server in enumerate(sorted(placement)):
            best: tuple[PlacementObjective, NodeId] | None = None
            for nb in topo.neighbors(server):
                if nb in placement or nb not in allowed:
                    continue
                cand = tuple(placement - {server} | {nb})
                obj = ev.objective(cand)
                if best is None or (obj, nb) < best:
                    best = (obj, nb)
            if best is not None and best[0] < current:
                placement.remove(server)
                placement.add(best[1])
                current = best[0]
                moved = True
                log.append(MoveRecord(iteration, idx, server, best[1],
                                      current.max_dist, current.avg_dist))
        if not moved:
            break
    return tuple(sorted(placement)), current, log


def brute_force_placement(
    dm: DistanceMatrix,
    users: list[UserGroup],
    k: int,
    sites: tuple[NodeId, ...] | None = None,
) -> tuple[Placement, PlacementObjective]:
    """Exact optimum by enumerating every k-subset of sites (desk scale only)."""
    ids = _resolve_sites(dm, sites)
    n = len(ids)
    _check_k(k, n)
    if math.comb(n, k) > BRUTE_FORCE_LIMIT:
        raise InfeasibleError(f"C({n},{k}) exceeds enumeration guard")
    ev = _Eval(dm, users)
    best: tuple[PlacementObjective, Placement] | None = None
    for combo in combinations(ids, k):  # lexicographic, so ties resolve by id
        obj = ev.objective(combo)
        if best is None or obj < best[0]:
            best = (obj, combo)
    return best[1], best[0]
