"""Request profiles: Zipf generation, trace loading, aggregation and correlation.

A profile is a probability distribution over a fixed service universe. Rank
correlation between two profiles uses descending midranks over the full
universe and the difference-of-ranks form rho = 1 - 6*sum(d^2) / (n(n^2-1)),
deliberately without a tie-correction term (see spearman).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .rng import derive_seed, make_rng, shuffled, weighted_sample_without_replacement
from .topology import NodeId, Topology

ServiceId = str

PROB_SUM_TOL = 1e-9


class Profile:
    """Immutable probability map over an ordered service universe."""

    __slots__ = ("universe", "probs", "_ranks")

    def __init__(self, universe: tuple[ServiceId, ...], probs: np.ndarray):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (len(universe),):
            raise ValidationError("probability vector does not match universe")
        if (probs < 0).any():
            raise ValidationError("negative probability")
        total = float(probs.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"probabilities sum to {total}, not 1")
        self.universe = tuple(universe)
        self.probs = probs
        self.probs.flags.writeable = False
        self._ranks: np.ndarray | None = None

    @classmethod
    def from_dict(
        cls, entries: dict[ServiceId, float], universe: tuple[ServiceId, ...] | None = None
    ) -> "Profile":
        """Build from a service->probability map; absent services get 0."""
        if universe is None:
            universe = tuple(sorted(entries))
        unknown = set(entries) - set(universe)
        if unknown:
            raise ValidationError(f"services outside universe: {sorted(unknown)[:5]}")
        probs = np.array([entries.get(s, 0.0) for s in universe], dtype=np.float64)
        return cls(universe, probs)

    @property
    def entries(self) -> dict[ServiceId, float]:
        return {s: float(p) for s, p in zip(self.universe, self.probs)}

    def support(self) -> list[ServiceId]:
        return [s for s, p in zip(self.universe, self.probs) if p > 0]

    def ranks(self) -> np.ndarray:
        """Descending midranks over the full universe (cached)."""
        if self._ranks is None:
            self._ranks = midranks_descending(self.probs)
        return self._ranks

    def to_json(self) -> str:
        return json.dumps(
            {s: float(p) for s, p in zip(self.universe, self.probs)}, sort_keys=True
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Profile)
            and self.universe == other.universe
            and np.array_equal(self.probs, other.probs)
        )

    def __repr__(self) -> str:
        top = sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))[:3]
        return f"Profile({len(self.universe)} services, top={top})"


@dataclass
class UserGroup:
    """All end-users behind one access node, aggregated to one demand point."""

    node: NodeId
    priority: float = 1.0
    profile: Profile | None = None
    request_count: int = 100

    def __post_init__(self):
        if not self.priority > 0:
            raise ValidationError(f"user {self.node!r}: non-positive priority")
        if self.request_count < 1:
            raise ValidationError(f"user {self.node!r}: non-positive request count")


@dataclass(frozen=True)
class ZipfModel:
    """Zipf popularity model: pmf(rank r) proportional to 1/r^alpha over N ranks."""

    alpha: float = 0.3
    universe_size: int = 100
    profile_size: int = 15

    def __post_init__(self):
        if self.alpha < 0:
            raise ValidationError("alpha must be non-negative")
        if self.universe_size < 1:
            raise ValidationError("universe_size must be positive")
        if not 1 <= self.profile_size <= self.universe_size:
            raise ValidationError("profile_size must be in 1..universe_size")


def make_universe(size: int) -> tuple[ServiceId, ...]:
    """Service ids s00..; zero-padded so lexicographic order is popularity order."""
    width = len(str(size - 1)) if size > 1 else 1
    return tuple(f"s{i:0{width}d}" for i in range(size))


def zipf_pmf(alpha: float, n: int) -> np.ndarray:
    """Normalized 1/r^alpha over ranks 1..n; descending, sums to 1."""
    if n < 1:
        raise ValidationError("need at least one rank")
    weights = np.arange(1, n + 1, dtype=np.float64) ** (-float(alpha))
    return weights / weights.sum()


def generate_profile(model: ZipfModel, rng_seed: int,
                     universe: tuple[ServiceId, ...] | None = None) -> Profile:
    """Seeded pseudo-realistic profile with exactly `profile_size` liked services.

    The support is drawn without replacement, weighted by global Zipf
    popularity (universe order = popularity order); within the support the
    Zipf pmf over profile_size ranks is dealt onto a random permutation, so a
    user's favourite service is not necessarily a globally popular one.
    """
    if universe is None:
        universe = make_universe(model.universe_size)
    elif len(universe) != model.universe_size:
        raise ValidationError("universe size does not match model")
    rng = make_rng(rng_seed)
    global_pmf = zipf_pmf(model.alpha, model.universe_size)
    support = weighted_sample_without_replacement(
        rng, global_pmf.tolist(), model.profile_size
    )
    order = shuffled(rng, support)
    within = zipf_pmf(model.alpha, model.profile_size)
    probs = np.zeros(model.universe_size)
    probs[order] = within
    probs /= probs.sum()
    return Profile(universe, probs)


def generate_users(
    topo: Topology, model: ZipfModel, master_seed: int, request_count: int = 100
) -> list[UserGroup]:
    """One user group per topology node, profile seeded per node id."""
    universe = make_universe(model.universe_size)
    users = []
    for node in topo.node_ids:
        profile = generate_profile(model, derive_seed(master_seed, "profile", node), universe)
        users.append(
            UserGroup(node=node, priority=topo.priorities[node],
                      profile=profile, request_count=request_count)
        )
    return users


def load_trace(data: bytes) -> list[UserGroup]:
    """Load user groups from a request-count trace CSV.

    Expects exactly the header node_id,service_id,count; per node the profile
    probability of a service is its count share. Priorities default to 1.0.
    """
    text = data.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty trace file") from None
    if [h.strip() for h in header] != ["node_id", "service_id", "count"]:
        raise ValidationError(f"unknown columns {header!r}; "
                              "expected node_id,service_id,count")
    counts: dict[NodeId, dict[ServiceId, int]] = {}
    services: set[ServiceId] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise ValidationError(f"line {lineno}: expected 3 columns, got {len(row)}")
        node, service, count_text = (cell.strip() for cell in row)
        if not node:
            raise ValidationError(f"line {lineno}: empty node id")
        if not service:
            raise ValidationError(f"line {lineno}: empty service id")
        try:
            count = int(count_text)
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: bad count {count_text!r}") from exc
        if count <= 0:
            raise ValidationError(f"line {lineno}: non-positive count {count}")
        counts.setdefault(node, {})
        counts[node][service] = counts[node].get(service, 0) + count
        services.add(service)
    if not counts:
        raise ValidationError("trace has no data rows")
    universe = tuple(sorted(services))
    users = []
    for node in sorted(counts):
        per_node = counts[node]
        total = sum(per_node.values())
        probs = np.array([per_node.get(s, 0) / total for s in universe])
        users.append(UserGroup(node=node, profile=Profile(universe, probs)))
    return users


def aggregate(profiles: list[Profile]) -> Profile:
    """Unweighted arithmetic mean of profiles over a shared universe.

    Columns are summed with math.fsum, so the result does not depend on the
    order of the input profiles.
    """
    if not profiles:
        raise ValidationError("cannot aggregate zero profiles")
    universe = profiles[0].universe
    for p in profiles[1:]:
        if p.universe != universe:
            raise ValidationError("profiles have different universes")
    k = len(profiles)
    stacked = [p.probs for p in profiles]
    mean = np.array([math.fsum(row[i] for row in stacked) / k for i in range(len(universe))])
    return Profile(universe, mean)


def midranks_descending(values: np.ndarray) -> np.ndarray:
    """1-based ranks, largest value first, ties sharing their average rank."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    order = np.argsort(-v, kind="stable")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(p: Profile, q: Profile) -> float:
    """Rank correlation of two profiles over their shared universe.

    Uses rho = 1 - 6*sum(d^2) / (n(n^2-1)) on descending midranks. No tie
    correction is applied: with heavily tied profiles the tie-corrected
    (Pearson-of-midranks) variant disagrees with this form, and this form is
    the one the rest of the optimization is calibrated against.
    """
    if p.universe != q.universe:
        raise ValidationError("profiles have different universes")
    n = len(p.universe)
    if n < 2:
        raise ValidationError("need at least 2 services for rank correlation")
    d = p.ranks() - q.ranks()
    return float(1.0 - 6.0 * float(d @ d) / (n * (n * n - 1)))
