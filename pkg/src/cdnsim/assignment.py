"""User-to-server assignment optimized for aggregate profile correlation.

The greedy evaluates, for every user, the rank correlation against every
server's would-be profile (the user's own profile always counted in), then
applies all proposed reassignments at once. A batch only sticks if the total
correlation strictly improves; otherwise it is rolled back and the search
stops, which keeps the simultaneous update from oscillating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .placement import Assignment, Placement
from .profiles import Profile, UserGroup, aggregate, spearman
from .topology import DistanceMatrix, NodeId


@dataclass(frozen=True)
class AssignmentObjective:
    """Total rank correlation plus the distance metrics of the same assignment."""

    total_corr: float
    max_dist: float
    avg_dist: float


class BatchRecord(NamedTuple):
    """One simultaneous-reassignment round."""

    iteration: int
    moves_proposed: int
    total_corr_before: float
    total_corr_after: float
    accepted: bool


def server_profile(users: list[UserGroup], assignment: Assignment, server: NodeId) -> Profile:
    """Mean profile of the users currently assigned to `server`."""
    member_profiles = [u.profile for u in users if assignment[u.node] == server]
    if not member_profiles:
        raise ValidationError(f"server {server!r} has no assigned users")
    return aggregate(member_profiles)


def candidate_corr(
    users: list[UserGroup], assignment: Assignment, user: UserGroup, server: NodeId
) -> float:
    """Correlation of `user` with the profile `server` would have after joining.

    The user's own profile is included whether or not it is already a member,
    so current-server and new-server coefficients are directly comparable. For
    an empty server this degrades to the user's self-correlation.
    """
    member_profiles = [u.profile for u in users if assignment[u.node] == server]
    if assignment[user.node] != server:
        member_profiles.append(user.profile)
    return spearman(user.profile, aggregate(member_profiles))


class _CorrEval:
    """Incremental candidate-correlation evaluation via per-server profile sums."""

    def __init__(self, users: list[UserGroup], placement: Placement):
        if not users:
            raise ValidationError("no users to assign")
        self.users = sorted(users, key=lambda u: u.node)
        self.servers = tuple(sorted(placement))
        self.universe = self.users[0].profile.universe
        for u in self.users:
            if u.profile.universe != self.universe:
                raise ValidationError(f"user {u.node!r} has a different universe")
        self.P = np.stack([u.profile.probs for u in self.users])
        self.user_index = {u.node: i for i, u in enumerate(self.users)}

    def _server_sums(self, assignment: Assignment) -> tuple[dict, dict]:
        sums = {s: np.zeros(len(self.universe)) for s in self.servers}
        counts = {s: 0 for s in self.servers}
        for u in self.users:
            s = assignment[u.node]
            sums[s] += self.P[self.user_index[u.node]]
            counts[s] += 1
        return sums, counts

    def corr(self, sums, counts, assignment: Assignment, user: UserGroup,
             server: NodeId) -> float:
        vec = sums[server]
        n = counts[server]
        if assignment[user.node] != server:
            vec = vec + self.P[self.user_index[user.node]]
            n += 1
        candidate = Profile(self.universe, vec / vec.sum())
        return spearman(user.profile, candidate)

    def total(self, assignment: Assignment) -> float:
        sums, counts = self._server_sums(assignment)
        return sum(
            self.corr(sums, counts, assignment, u, assignment[u.node]) for u in self.users
        )


def total_correlation(users: list[UserGroup], assignment: Assignment) -> float:
    """Sum over users of the correlation with their own server profile."""
    placement = tuple(sorted(set(assignment.values())))
    return _CorrEval(users, placement).total(assignment)


def proposal_set(
    users: list[UserGroup], placement: Placement, assignment: Assignment
) -> list[tuple[NodeId, NodeId]]:
    """Improving reassignments, one per user: (user node, best new server).

    A user proposes the server with the highest candidate coefficient that is
    both positive and strictly above its current one; ties go to the lower
    server id. Users with no improving server propose nothing.
    """
    ev = _CorrEval(users, placement)
    sums, counts = ev._server_sums(assignment)
    proposals: list[tuple[NodeId, NodeId]] = []
    for u in ev.users:
        current = ev.corr(sums, counts, assignment, u, assignment[u.node])
        best: tuple[float, NodeId] | None = None
        for s in ev.servers:
            if s == assignment[u.node]:
                continue
            rho = ev.corr(sums, counts, assignment, u, s)
            if rho <= 0 or rho <= current:
                continue
            if best is None or rho > best[0]:
                best = (rho, s)
        if best is not None:
            proposals.append((u.node, best[1]))
    return proposals


def greedy_correlation(
    dm: DistanceMatrix,
    users: list[UserGroup],
    placement: Placement,
    initial: Assignment,
) -> tuple[Assignment, AssignmentObjective, list[BatchRecord]]:
    """Simultaneous-reassignment greedy for total profile correlation.

    Rounds of proposal_set are applied as a batch; a batch that does not
    strictly raise the total correlation is reverted and the loop ends.
    """
    for u in users:
        if u.node not in initial:
            raise ValidationError(f"user {u.node!r} missing from initial assignment")
        if initial[u.node] not in placement:
            raise ValidationError(f"user {u.node!r} assigned outside placement")
    ev = _CorrEval(users, placement)
    assignment = dict(initial)
    total = ev.total(assignment)
    log: list[BatchRecord] = []
    iteration = 0
    while True:
        iteration += 1
        proposals = proposal_set(users, placement, assignment)
        if not proposals:
            log.append(BatchRecord(iteration, 0, total, total, False))
            break
        candidate = dict(assignment)
        for user_node, server in proposals:
            candidate[user_node] = server
        new_total = ev.total(candidate)
        accepted = new_total > total
        log.append(BatchRecord(iteration, len(proposals), total, new_total, accepted))
        if not accepted:
            break
        assignment, total = candidate, new_total
    weighted = np.array([u.priority * dm.get(u.node, assignment[u.node]) for u in users])
    objective = AssignmentObjective(total, float(weighted.max()), float(weighted.mean()))
    return assignment, objective, log


def relocate_servers(
    dm: DistanceMatrix,
    users: list[UserGroup],
    placement: Placement,
    assignment: Assignment,
) -> tuple[Placement, Assignment]:
    """Move each server to the 1-center of its assigned users.

    Group membership is preserved; the assignment comes back with its targets
    renamed to the new locations. Servers without users keep their node. If
    two groups want the same node, the later server (id order) takes its best
    still-free candidate.
    """
    groups: dict[NodeId, list[UserGroup]] = {s: [] for s in placement}
    for u in users:
        s = assignment[u.node]
        if s not in groups:
            raise ValidationError(f"user {u.node!r} assigned outside placement")
        groups[s].append(u)

    new_location: dict[NodeId, NodeId] = {}
    taken = {s for s, members in groups.items() if not members}
    for s in sorted(groups):
        members = groups[s]
        if not members:
            new_location[s] = s
            continue
        rows = [dm.index(u.node) for u in members]
        prios = np.array([u.priority for u in members])
        weighted = prios[:, None] * dm.matrix[rows, :]
        maxs = weighted.max(axis=0)
        avgs = weighted.mean(axis=0)
        ranked = sorted(range(len(dm.ids)), key=lambda i: (maxs[i], avgs[i], dm.ids[i]))
        target = next(dm.ids[i] for i in ranked if dm.ids[i] not in taken)
        new_location[s] = target
        taken.add(target)

    new_placement = tuple(sorted(new_location.values()))
    new_assignment = {u.node: new_location[assignment[u.node]] for u in users}
    return new_placement, new_assignment
