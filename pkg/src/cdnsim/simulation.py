"""Seeded request-replay simulation over a placed and assigned scenario.

Requests are drawn i.i.d. from each user's profile and interleaved round-robin
across users in node-id order, so cache contention at a shared server is
represented without a clock model. A hit costs the user-to-server path weight;
a miss additionally costs the server-to-origin path. BELADY scenarios replay
each server's request stream through the offline optimum instead of an online
cache.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .cache import CacheConfig, CacheStats, belady_misses, make_cache
from .errors import ValidationError
from .placement import Assignment, Placement, closest_assignment, dragoon
from .profiles import Profile, ServiceId, UserGroup
from .rng import derive_seed, make_rng
from .topology import NodeId, Topology

SWEEP_AXES = ("server_count", "cache_size", "policy")


@dataclass
class Scenario:
    """Everything one simulation run depends on, cross-validated up front."""

    topology: Topology
    users: list[UserGroup]
    placement: Placement
    assignment: Assignment
    cache: CacheConfig
    origin: NodeId
    master_seed: int
    requests_per_user: int = 100

    def validate(self) -> "Scenario":
        topo = self.topology
        if self.requests_per_user < 100:
            raise ValidationError("requests_per_user must be at least 100")
        if self.origin not in topo:
            raise ValidationError(f"origin {self.origin!r} not in topology")
        if not self.placement:
            raise ValidationError("empty placement")
        for s in self.placement:
            if s not in topo:
                raise ValidationError(f"server {s!r} not in topology")
        nodes = {u.node for u in self.users}
        if len(nodes) != len(self.users):
            raise ValidationError("duplicate user nodes")
        for u in self.users:
            if u.node not in topo:
                raise ValidationError(f"user {u.node!r} not in topology")
            if u.profile is None:
                raise ValidationError(f"user {u.node!r} has no profile")
        if set(self.assignment) != nodes:
            raise ValidationError("assignment does not cover exactly the user set")
        for user_node, server in self.assignment.items():
            if server not in self.placement:
                raise ValidationError(
                    f"user {user_node!r} assigned to non-server {server!r}"
                )
        return self


@dataclass
class SimulationResult:
    per_server: dict[NodeId, CacheStats]
    overall: CacheStats
    miss_ratio: float
    max_user_distance: float
    avg_user_distance: float
    network_load: float


def generate_requests(
    user: UserGroup, master_seed: int, count: int | None = None
) -> list[ServiceId]:
    """Seeded i.i.d. draws from the user's profile.

    The stream is pinned by PCG64 under the seed derived from
    (master_seed, "requests", node): inverse-CDF over the profile's
    cumulative probabilities in universe order.
    """
    if user.profile is None:
        raise ValidationError(f"user {user.node!r} has no profile")
    n = count if count is not None else user.request_count
    rng = make_rng(derive_seed(master_seed, "requests", user.node))
    cdf = np.cumsum(user.profile.probs)
    draws = rng.random(n)
    idx = np.minimum(np.searchsorted(cdf, draws, side="right"), len(cdf) - 1)
    return [user.profile.universe[i] for i in idx]


def run(scenario: Scenario) -> SimulationResult:
    """Replay the scenario's full request workload and collect statistics."""
    s = scenario.validate()
    dm = s.topology.distance_matrix()
    users = sorted(s.users, key=lambda u: u.node)

    streams = {
        u.node: generate_requests(u, s.master_seed, s.requests_per_user) for u in users
    }
    # round-robin interleaving, then a deterministic per-server partition
    per_server_stream: dict[NodeId, list[tuple[NodeId, ServiceId]]] = {
        srv: [] for srv in s.placement
    }
    for r in range(s.requests_per_user):
        for u in users:
            per_server_stream[s.assignment[u.node]].append((u.node, streams[u.node][r]))

    per_server: dict[NodeId, CacheStats] = {}
    network_load = 0.0
    for server in sorted(s.placement):
        stream = per_server_stream[server]
        to_origin = dm.get(server, s.origin)
        for user_node, _ in stream:
            network_load += dm.get(user_node, server)
        if s.cache.policy == "BELADY":
            stats = belady_misses([item for _, item in stream], s.cache.capacity)
        else:
            cache = make_cache(s.cache)
            for _, item in stream:
                cache.access(item)
            stats = cache.stats
        network_load += stats.misses * to_origin
        per_server[server] = stats

    overall = CacheStats()
    for stats in per_server.values():
        overall = overall.add(stats)
    weighted = np.array(
        [u.priority * dm.get(u.node, s.assignment[u.node]) for u in users]
    )
    return SimulationResult(
        per_server=per_server,
        overall=overall,
        miss_ratio=overall.miss_ratio,
        max_user_distance=float(weighted.max()),
        avg_user_distance=float(weighted.mean()),
        network_load=network_load,
    )


def experiment_sweep(
    base: Scenario,
    axis: str,
    values: list,
    optimizer: str = "distance",
) -> list[tuple[object, SimulationResult]]:
    """One run per axis value under a shared master seed.

    server_count re-optimizes placement per value (distance: dragoon plus
    closest assignment; correlation: additionally the correlation greedy and
    server relocation). cache_size and policy keep the base placement and
    assignment fixed.
    """
    if axis not in SWEEP_AXES:
        raise ValidationError(f"unknown sweep axis {axis!r}; one of {SWEEP_AXES}")
    if not values:
        raise ValidationError("sweep needs at least one value")
    if optimizer not in ("distance", "correlation"):
        raise ValidationError(f"unknown optimizer {optimizer!r}")

    results = []
    for value in values:
        if axis == "cache_size":
            scenario = replace(base, cache=replace(base.cache, capacity=int(value)))
        elif axis == "policy":
            scenario = replace(base, cache=replace(base.cache, policy=str(value)))
        else:
            scenario = _reoptimized(base, int(value), optimizer)
        results.append((value, run(scenario)))
    return results


def _reoptimized(base: Scenario, k: int, optimizer: str) -> Scenario:
    from .assignment import greedy_correlation, relocate_servers

    dm = base.topology.distance_matrix()
    placement, _, _ = dragoon(dm, base.topology, base.users, k)
    assignment = closest_assignment(dm, base.users, placement)
    if optimizer == "correlation":
        assignment, _, _ = greedy_correlation(dm, base.users, placement, assignment)
        placement, assignment = relocate_servers(dm, base.users, placement, assignment)
    return replace(base, placement=placement, assignment=assignment)


def scenario_to_json(s: Scenario) -> str:
    """Self-contained JSON dump; loadable with scenario_from_json."""
    doc = {
        "topology": json.loads(s.topology.to_json()),
        "universe": list(s.users[0].profile.universe) if s.users else [],
        "users": [
            {
                "node": u.node,
                "priority": u.priority,
                "request_count": u.request_count,
                "profile": {
                    svc: float(p)
                    for svc, p in zip(u.profile.universe, u.profile.probs)
                    if p > 0
                },
            }
            for u in sorted(s.users, key=lambda u: u.node)
        ],
        "placement": sorted(s.placement),
        "assignment": dict(sorted(s.assignment.items())),
        "cache": {
            "policy": s.cache.policy,
            "capacity": s.cache.capacity,
            "lirs_hir_fraction": s.cache.lirs_hir_fraction,
        },
        "origin": s.origin,
        "master_seed": s.master_seed,
        "requests_per_user": s.requests_per_user,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def scenario_from_json(text: str) -> Scenario:
    try:
        doc = json.loads(text)
        topo = Topology.from_json(json.dumps(doc["topology"]))
        universe = tuple(doc["universe"])
        users = [
            UserGroup(
                node=u["node"],
                priority=float(u.get("priority", 1.0)),
                profile=Profile.from_dict(u["profile"], universe),
                request_count=int(u.get("request_count", 100)),
            )
            for u in doc["users"]
        ]
        scenario = Scenario(
            topology=topo,
            users=users,
            placement=tuple(doc["placement"]),
            assignment=dict(doc["assignment"]),
            cache=CacheConfig(
                capacity=int(doc["cache"]["capacity"]),
                policy=doc["cache"]["policy"],
                lirs_hir_fraction=float(doc["cache"].get("lirs_hir_fraction", 0.1)),
            ),
            origin=doc["origin"],
            master_seed=int(doc["master_seed"]),
            requests_per_user=int(doc.get("requests_per_user", 100)),
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"bad scenario JSON: {exc}") from exc
    return scenario.validate()
