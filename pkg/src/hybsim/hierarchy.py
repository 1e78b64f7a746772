"""Multi-level composition of hybrid caches with a fixed latency model."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .cache import AccessOutcome, FlushOutcome, HybridCache, Verdict, check_idid
from .geometry import L1_DEFAULT, L2_DEFAULT, L3_DEFAULT, CacheConfig, validate_config
from .replacement import SeededRng

MEMORY = -1  # serviced_level for a request that missed everywhere

STATS_COLUMNS = (
    "level", "idid", "accesses", "hits", "misses", "miss_rate",
    "evictions", "writebacks", "amat_cycles",
)


@dataclass(frozen=True)
class HierarchyConfig:
    levels: tuple[CacheConfig, ...] = (L1_DEFAULT, L2_DEFAULT, L3_DEFAULT)
    memory_latency_cycles: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.levels:
            raise ValueError("hierarchy needs at least one level")
        object.__setattr__(self, "levels", tuple(self.levels))
        for cfg in self.levels:
            validate_config(cfg)
        if self.memory_latency_cycles < 0:
            raise ValueError("negative memory latency")


@dataclass(frozen=True)
class HierarchyOutcome:
    serviced_level: int
    latency_cycles: int
    level_outcomes: tuple[AccessOutcome, ...]

    @property
    def from_memory(self) -> bool:
        return self.serviced_level == MEMORY


@dataclass
class Counters:
    hits: int = 0
    misses: int = 0
    evictions: int = 0
    writebacks: int = 0

    @property
    def accesses(self) -> int:
        return self.hits + self.misses

    @property
    def miss_rate(self) -> float:
        return self.misses / self.accesses if self.accesses else 0.0


@dataclass
class StatsTable:
    level_names: tuple[str, ...]
    hit_latencies: tuple[int, ...]
    memory_latency: int
    cells: dict = field(default_factory=lambda: defaultdict(Counters))
    memory_fetches: dict = field(default_factory=lambda: defaultdict(int))
    violations: dict = field(default_factory=lambda: defaultdict(int))

    def cell(self, level: int, idid: int) -> Counters:
        return self.cells.get((level, idid), Counters())

    def domains(self) -> list[int]:
        return sorted({d for _, d in self.cells} | set(self.memory_fetches) | {0})

    def amat(self, level: int, idid: int) -> float:
        """Average access time seen at ``level`` by ``idid``, from the counters."""
        t = float(self.memory_latency)
        for k in range(len(self.level_names) - 1, level - 1, -1):
            t = self.hit_latencies[k] + self.cell(k, idid).miss_rate * t
        return t

    def total_accesses(self, idid: Optional[int] = None) -> int:
        return sum(c.accesses for (k, d), c in self.cells.items()
                   if k == 0 and (idid is None or d == idid))

    def rows(self) -> list[dict]:
        out = []
        for d in self.domains():
            for k, name in enumerate(self.level_names):
                c = self.cell(k, d)
                out.append({
                    "level": name, "idid": d, "accesses": c.accesses, "hits": c.hits,
                    "misses": c.misses, "miss_rate": round(c.miss_rate, 6),
                    "evictions": c.evictions, "writebacks": c.writebacks,
                    "amat_cycles": round(self.amat(k, d), 4),
                })
        return out


class Hierarchy:
    """L1..Ln of :class:`HybridCache`, non-inclusive with fill on return.

    A request walks the levels closest first.  Each level that misses
    allocates the line for the requesting domain, so a hit at level k leaves
    the line in every closer level and a full miss fills all of them.  The
    reported latency is the sum of the hit latencies of every level visited,
    plus the memory latency on a full miss.
    """

    def __init__(self, config: HierarchyConfig | None = None):
        self.config = config or HierarchyConfig()
        self.levels = [HybridCache(cfg, SeededRng(self.config.seed, stream=i))
                       for i, cfg in enumerate(self.config.levels)]
        self._lat = tuple(cfg.hit_latency_cycles for cfg in self.config.levels)
        self.reset_stats()

    def reset_stats(self) -> None:
        self._stats = StatsTable(
            tuple(cfg.level_name for cfg in self.config.levels), self._lat,
            self.config.memory_latency_cycles)

    def stats(self) -> StatsTable:
        return self._stats

    def access(self, addr: int, idid: int = 0, write: bool = False,
               account: Optional[int] = None) -> HierarchyOutcome:
        """Service one read or write.

        ``account`` is the domain the counters are booked under; it defaults
        to ``idid`` and lets a baseline run keep per-process accounting while
        every request travels as idid 0.
        """
        check_idid(idid)
        key = idid if account is None else account
        cells = self._stats.cells
        latency = 0
        outcomes = []
        for k, level in enumerate(self.levels):
            # only the closest level sees the write; lower fills are clean
            o = level.lookup(addr, idid, write and k == 0)
            outcomes.append(o)
            latency += self._lat[k]
            c = cells[(k, key)]
            if o.verdict is Verdict.HIT:
                c.hits += 1
                return HierarchyOutcome(k, latency, tuple(outcomes))
            c.misses += 1
            if o.victim is not None:
                c.evictions += 1
                if o.writeback is not None:
                    c.writebacks += 1
                    self._absorb_writeback(k + 1, o.victim.line_addr, o.victim.idid)
        self._stats.memory_fetches[key] += 1
        return HierarchyOutcome(MEMORY, latency + self.config.memory_latency_cycles,
                                tuple(outcomes))

    def _absorb_writeback(self, start: int, line_addr: int, idid: int) -> None:
        # the first lower level holding the owner's copy takes the dirty data;
        # otherwise it goes to memory
        for level in self.levels[start:]:
            if level.mark_dirty(line_addr, idid):
                return

    def flush(self, addr: int, idid: int = 0) -> list[FlushOutcome]:
        return [level.flush(addr, idid) for level in self.levels]

    def probe(self, addr: int, idid: int = 0) -> Optional[int]:
        """Closest level that would hit, MEMORY if none; no state change."""
        for k, level in enumerate(self.levels):
            if level.probe(addr, idid):
                return k
        return MEMORY

    def hit_latency(self, level: int) -> int:
        """Latency reported for a hit serviced at ``level`` (or memory)."""
        if level == MEMORY:
            return sum(self._lat) + self.config.memory_latency_cycles
        return sum(self._lat[: level + 1])


def build_hierarchy(levels: Sequence[CacheConfig] | None = None, memory_latency: int = 100,
                    seed: int = 0) -> Hierarchy:
    levels = tuple(levels) if levels is not None else (L1_DEFAULT, L2_DEFAULT, L3_DEFAULT)
    return Hierarchy(HierarchyConfig(levels, memory_latency, seed))
