"""One level of a HybCache: set-associative for idid 0, fully associative
subcache with random replacement for every other isolation domain."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .geometry import CacheConfig, subcache_slot, validate_config
from .replacement import LruState, SeededRng

MAX_IDID = 15


class DomainError(ValueError):
    """Request carries an isolation domain id outside the 4-bit range."""


class AccessKind(enum.Enum):
    READ = "R"
    WRITE = "W"
    FLUSH = "F"
    IO_READ = "IR"
    IO_WRITE = "IW"


class Verdict(enum.Enum):
    HIT = "hit"
    MISS = "miss"


@dataclass(frozen=True)
class AccessRequest:
    pid: int
    idid: int
    kind: AccessKind
    addr: int


class Evicted(NamedTuple):
    line_addr: int
    idid: int
    dirty: bool


class AccessOutcome(NamedTuple):
    verdict: Verdict
    victim: Optional[Evicted] = None
    writeback: Optional[int] = None
    filled_slot: Optional[tuple[int, int]] = None

    @property
    def hit(self) -> bool:
        return self.verdict is Verdict.HIT


@dataclass(frozen=True)
class FlushOutcome:
    invalidated: bool
    writeback: Optional[int] = None


@dataclass(frozen=True)
class CacheLine:
    set_index: int
    way: int
    valid: bool
    dirty: bool
    line_addr: int
    idid: int


_HIT = AccessOutcome(Verdict.HIT)


def check_idid(idid: int) -> int:
    if not 0 <= idid <= MAX_IDID:
        raise DomainError(f"idid {idid} outside [0, {MAX_IDID}]")
    return idid


class HybridCache:
    """A single cache level running the HybCache controller policy.

    Requests with idid 0 see a conventional write-back, write-allocate
    ``num_ways``-way LRU cache.  Requests with any other idid are looked up
    by full line address among the subcache ways only, must match the line's
    owner exactly, and on a miss replace a uniformly random subcache entry.
    """

    def __init__(self, cfg: CacheConfig, rng: SeededRng | None = None):
        self.cfg = validate_config(cfg)
        self.rng = rng if rng is not None else SeededRng(0)
        n = cfg.num_sets * cfg.num_ways
        self._valid = [False] * n
        self._dirty = [False] * n
        self._line = [0] * n
        self._idid = [0] * n
        # (line_addr, idid) -> flat slot, for every valid line
        self._where: dict[tuple[int, int], int] = {}
        self.lru = LruState(cfg.num_sets, cfg.num_ways)
        self._obits = cfg.offset_bits
        self._smask = cfg.num_sets - 1

    # -- lookup --------------------------------------------------------------

    def probe(self, addr: int, idid: int) -> bool:
        """Would ``access`` hit?  Never mutates."""
        return (addr >> self._obits, idid) in self._where

    def access(self, req: AccessRequest) -> AccessOutcome:
        if req.kind is AccessKind.READ:
            write = False
        elif req.kind is AccessKind.WRITE:
            write = True
        else:
            raise ValueError(f"access() takes reads and writes, got {req.kind.name}")
        check_idid(req.idid)
        if not 0 <= req.addr < (1 << self.cfg.addr_bits):
            raise ValueError(f"address {req.addr:#x} out of range")
        return self.lookup(req.addr, req.idid, write)

    def lookup(self, addr: int, idid: int, write: bool = False) -> AccessOutcome:
        """``access`` without request validation; used on the hierarchy's hot path."""
        line = addr >> self._obits
        W = self.cfg.num_ways
        slot = self._where.get((line, idid))
        if slot is not None:
            s, w = divmod(slot, W)
            self.lru.touch(s, w)
            if write:
                self._dirty[slot] = True
            return _HIT

        if idid == 0:
            s = line & self._smask
            w = self.lru.victim(s)
        else:
            s, w = subcache_slot(self.rng.next_uniform(self.cfg.n_isolated), self.cfg)
        slot = s * W + w
        victim = writeback = None
        if self._valid[slot]:
            old = (self._line[slot], self._idid[slot])
            del self._where[old]
            victim = Evicted(old[0], old[1], self._dirty[slot])
            if victim.dirty:
                writeback = old[0]
        self._valid[slot] = True
        self._dirty[slot] = write
        self._line[slot] = line
        self._idid[slot] = idid
        self._where[(line, idid)] = slot
        self.lru.touch(s, w)
        return AccessOutcome(Verdict.MISS, victim, writeback, (s, w))

    # -- maintenance ---------------------------------------------------------

    def flush(self, addr: int, idid: int) -> FlushOutcome:
        """Invalidate the copy of ``addr`` owned by ``idid``, if there is one.

        Copies held by other domains are untouched, and their presence does
        not change the outcome.
        """
        check_idid(idid)
        slot = self._where.pop((addr >> self._obits, idid), None)
        if slot is None:
            return FlushOutcome(False)
        self._valid[slot] = False
        wb = self._line[slot] if self._dirty[slot] else None
        self._dirty[slot] = False
        self.lru.demote(*divmod(slot, self.cfg.num_ways))
        return FlushOutcome(True, wb)

    def mark_dirty(self, line_addr: int, idid: int) -> bool:
        """Absorb a writeback from a closer level; False if the line is absent."""
        slot = self._where.get((line_addr, idid))
        if slot is None:
            return False
        self._dirty[slot] = True
        return True

    def snapshot(self) -> list[CacheLine]:
        W = self.cfg.num_ways
        return [
            CacheLine(i // W, i % W, self._valid[i], self._dirty[i], self._line[i], self._idid[i])
            for i in range(len(self._valid))
        ]

    def resident(self, idid: int) -> dict[int, tuple[int, int]]:
        """line_addr -> (set, way) for every valid line owned by ``idid``."""
        W = self.cfg.num_ways
        return {line: divmod(slot, W) for (line, d), slot in self._where.items() if d == idid}

    def __len__(self) -> int:
        return len(self._where)
