"""Uniform-item cache engine with pluggable replacement policies.

All policies are demand paging: a miss always inserts the requested item and,
at capacity, evicts exactly one resident chosen from the pre-insertion
residents. Belady's offline optimum therefore lower-bounds every online
policy here. Items have uniform size; capacity counts items.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

from .errors import ValidationError
from .profiles import ServiceId

POLICIES = ("LRU", "LRU2", "LFU", "LIRS", "BELADY")

_NEVER = float("inf")


@dataclass(frozen=True)
class CacheConfig:
    capacity: int
    policy: str = "LRU"
    lirs_hir_fraction: float = 0.1

    def __post_init__(self):
        if self.capacity < 1:
            raise ValidationError("cache capacity must be >= 1")
        if self.policy not in POLICIES:
            raise ValidationError(f"unknown policy {self.policy!r}; one of {POLICIES}")
        if not 0.0 < self.lirs_hir_fraction < 1.0:
            raise ValidationError("lirs_hir_fraction must be in (0, 1)")


@dataclass
class CacheStats:
    requests: int = 0
    hits: int = 0
    misses: int = 0
    cold_misses: int = 0

    @property
    def miss_ratio(self) -> float:
        return self.misses / self.requests if self.requests else 0.0

    def add(self, other: "CacheStats") -> "CacheStats":
        return CacheStats(
            self.requests + other.requests,
            self.hits + other.hits,
            self.misses + other.misses,
            self.cold_misses + other.cold_misses,
        )


class OnlineCache:
    """Shared bookkeeping; subclasses implement residency and victim choice."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.stats = CacheStats()
        self._seen: set[ServiceId] = set()
        self._clock = 0

    def access(self, item: ServiceId) -> tuple[bool, ServiceId | None]:
        """Request one item; returns (hit, evicted item if any)."""
        self._clock += 1
        self.stats.requests += 1
        if self._contains(item):
            self.stats.hits += 1
            self._on_hit(item)
            return True, None
        self.stats.misses += 1
        if item not in self._seen:
            self.stats.cold_misses += 1
            self._seen.add(item)
        evicted = self._insert(item)
        return False, evicted

    def resident_count(self) -> int:
        raise NotImplementedError

    def _contains(self, item: ServiceId) -> bool:
        raise NotImplementedError

    def _on_hit(self, item: ServiceId):
        raise NotImplementedError

    def _insert(self, item: ServiceId) -> ServiceId | None:
        raise NotImplementedError


class LRUCache(OnlineCache):
    def __init__(self, capacity: int):
        super().__init__(capacity)
        self._order: OrderedDict[ServiceId, None] = OrderedDict()

    def resident_count(self) -> int:
        return len(self._order)

    def _contains(self, item):
        return item in self._order

    def _on_hit(self, item):
        self._order.move_to_end(item)

    def _insert(self, item):
        evicted = None
        if len(self._order) >= self.capacity:
            evicted, _ = self._order.popitem(last=False)
        self._order[item] = None
        return evicted


class LRU2Cache(OnlineCache):
    """LRU-2: evict the resident whose second-most-recent access is oldest.

    Residents referenced fewer than twice have infinite backward-2 distance
    and are preferred victims, oldest single access first. Access history
    persists across evictions (no correlated-reference or retention cutoff),
    so an item's second touch gives it a finite distance even after it was
    dropped in between.
    """

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self._resident: set[ServiceId] = set()
        self._last: dict[ServiceId, int] = {}
        self._prev: dict[ServiceId, int] = {}

    def resident_count(self) -> int:
        return len(self._resident)

    def _touch(self, item):
        if item in self._last:
            self._prev[item] = self._last[item]
        self._last[item] = self._clock

    def _contains(self, item):
        return item in self._resident

    def _on_hit(self, item):
        self._touch(item)

    def _victim(self) -> ServiceId:
        once = [x for x in self._resident if x not in self._prev]
        if once:
            return min(once, key=lambda x: (self._last[x], x))
        return min(self._resident, key=lambda x: (self._prev[x], x))

    def _insert(self, item):
        evicted = None
        if len(self._resident) >= self.capacity:
            evicted = self._victim()
            self._resident.remove(evicted)
        self._touch(item)
        self._resident.add(item)
        return evicted


class LFUCache(OnlineCache):
    """Perfect LFU: frequency counters survive eviction; ties fall back to LRU."""

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self._resident: set[ServiceId] = set()
        self._count: dict[ServiceId, int] = {}
        self._last: dict[ServiceId, int] = {}

    def resident_count(self) -> int:
        return len(self._resident)

    def _touch(self, item):
        self._count[item] = self._count.get(item, 0) + 1
        self._last[item] = self._clock

    def _contains(self, item):
        return item in self._resident

    def _on_hit(self, item):
        self._touch(item)

    def _insert(self, item):
        evicted = None
        if len(self._resident) >= self.capacity:
            evicted = min(self._resident, key=lambda x: (self._count[x], self._last[x], x))
            self._resident.remove(evicted)
        self._touch(item)
        self._resident.add(item)
        return evicted


class LIRSCache(OnlineCache):
    """LIRS with the standard LIR/HIR stack semantics.

    The resident HIR queue holds max(1, round(hir_fraction * capacity)) items,
    clamped so at least one LIR slot remains for capacity >= 2. Stack S keeps
    recency history including non-resident entries; its bottom is always LIR
    after pruning.
    """

    def __init__(self, capacity: int, hir_fraction: float = 0.1):
        super().__init__(capacity)
        hir = max(1, round(hir_fraction * capacity))
        self._hir_size = min(hir, capacity - 1) if capacity >= 2 else 1
        self._lir_size = capacity - self._hir_size
        self._stack: OrderedDict[ServiceId, None] = OrderedDict()  # oldest first
        self._queue: OrderedDict[ServiceId, None] = OrderedDict()  # resident HIR, FIFO
        self._lir: set[ServiceId] = set()

    def resident_count(self) -> int:
        return len(self._lir) + len(self._queue)

    def _contains(self, item):
        return item in self._lir or item in self._queue

    def _stack_push(self, item):
        if item in self._stack:
            del self._stack[item]
        self._stack[item] = None

    def _prune(self):
        while self._stack:
            bottom = next(iter(self._stack))
            if bottom in self._lir:
                break
            del self._stack[bottom]

    def _demote_bottom_lir(self):
        # during warm-up non-LIR entries can sit below the lowest LIR block
        self._prune()
        bottom = next(iter(self._stack))
        del self._stack[bottom]
        self._lir.remove(bottom)
        self._queue[bottom] = None
        self._prune()

    def _promote(self, item):
        """HIR block seen again while still on the stack becomes LIR."""
        self._queue.pop(item, None)
        self._lir.add(item)
        self._stack_push(item)
        if len(self._lir) > self._lir_size:
            self._demote_bottom_lir()

    def _on_hit(self, item):
        if item in self._lir:
            self._stack_push(item)
            self._prune()
        elif item in self._stack:
            self._promote(item)
        else:
            # resident HIR that already aged off the stack: refresh both
            self._stack_push(item)
            self._queue.move_to_end(item)

    def _insert(self, item):
        evicted = None
        if self.resident_count() >= self.capacity:
            evicted, _ = self._queue.popitem(last=False)
        if len(self._lir) < self._lir_size:
            # cold start: fill the LIR partition first
            self._lir.add(item)
            self._stack_push(item)
        elif item in self._stack:
            self._promote(item)
        else:
            self._stack_push(item)
            self._queue[item] = None
        return evicted


def make_cache(config: CacheConfig) -> OnlineCache:
    if config.policy == "LRU":
        return LRUCache(config.capacity)
    if config.policy == "LRU2":
        return LRU2Cache(config.capacity)
    if config.policy == "LFU":
        return LFUCache(config.capacity)
    if config.policy == "LIRS":
        return LIRSCache(config.capacity, config.lirs_hir_fraction)
    raise ValidationError(f"{config.policy} is not an online policy")


def belady_misses(trace: list[ServiceId], capacity: int) -> CacheStats:
    """Offline optimum: evict the resident reused farthest in the future.

    Items never used again beat any finite horizon; remaining ties break by
    the lexicographically smallest service id.
    """
    if capacity < 1:
        raise ValidationError("cache capacity must be >= 1")
    positions: dict[ServiceId, list[int]] = {}
    for i, item in enumerate(trace):
        positions.setdefault(item, []).append(i)
    cursor = {item: 0 for item in positions}

    stats = CacheStats()
    resident: dict[ServiceId, float] = {}  # item -> next use position
    seen: set[ServiceId] = set()
    for i, item in enumerate(trace):
        occurrences = positions[item]
        cursor[item] += 1
        next_use = occurrences[cursor[item]] if cursor[item] < len(occurrences) else _NEVER
        stats.requests += 1
        if item in resident:
            stats.hits += 1
            resident[item] = next_use
            continue
        stats.misses += 1
        if item not in seen:
            stats.cold_misses += 1
            seen.add(item)
        if len(resident) >= capacity:
            victim = min(resident, key=lambda x: (-resident[x], x))
            del resident[victim]
        resident[item] = next_use
    return stats


def replay(trace: list[ServiceId], config: CacheConfig) -> CacheStats:
    """Run a whole trace through one cache and return its statistics."""
    if config.policy == "BELADY":
        return belady_misses(list(trace), config.capacity)
    cache = make_cache(config)
    for item in trace:
        cache.access(item)
    return cache.stats


def read_trace(data: bytes) -> list[ServiceId]:
    """Trace file format: one service id per line; blank lines ignored."""
    return [line.strip() for line in data.decode("utf-8-sig").splitlines()
            if line.strip()]


STATS_CSV_HEADER = "policy,capacity,requests,hits,misses,cold_misses,miss_ratio"


def stats_to_csv(rows: list[tuple[str, int, CacheStats]]) -> str:
    """Stats dump with one line per (policy, capacity) replay."""
    lines = [STATS_CSV_HEADER]
    for policy, capacity, s in rows:
        lines.append(f"{policy},{capacity},{s.requests},{s.hits},{s.misses},"
                     f"{s.cold_misses},{s.miss_ratio!r}")
    return "\n".join(lines) + "\n"
