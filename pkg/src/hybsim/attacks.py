"""Attacker playbooks run against the simulated hierarchy.

Timing is read from the hierarchy's latency model, so every measurement is
noise free: a line counts as evicted exactly when its reload is not served
by L1 (Prime+Probe) or by any cache level (Flush+Reload).
"""
from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analysis import harmonic, rank_correlation
from .cache import HybridCache
from .geometry import L1_DEFAULT, CacheConfig, subcache_entry
from .hierarchy import MEMORY, Hierarchy, HierarchyConfig
from .replacement import SeededRng
from .workload import LINE, VictimSpec, random_key


class Mode(enum.Enum):
    BASELINE = "baseline"
    HYBCACHE = "hybcache"


ATTACKER_BASE = 0x8000000
VICTIM_DATA_BASE = 0x100000


@dataclass(frozen=True)
class AttackScenario:
    mode: Mode
    victim: VictimSpec
    attacker_idid: int = 0
    victim_idid: int = 1
    trials: int = 20
    seed: int = 0
    wait_model: str = "victim"  # "victim": victim runs between prime and probe; "idle": it does not
    hierarchy: HierarchyConfig = field(default_factory=HierarchyConfig)

    def __post_init__(self):
        if self.wait_model not in ("victim", "idle"):
            raise ValueError(f"unknown wait model {self.wait_model!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.mode is Mode.HYBCACHE:
            if self.victim_idid == 0:
                raise ValueError("HybCache scenario needs an isolated victim")
            if self.attacker_idid == self.victim_idid:
                raise ValueError("attacker must not share the victim's isolation domain")

    @property
    def domains(self) -> tuple[int, int]:
        """(attacker, victim) idids actually carried by requests."""
        if self.mode is Mode.BASELINE:
            return 0, 0
        return self.attacker_idid, self.victim_idid


@dataclass
class DetectionReport:
    kind: str
    mode: str
    key_bits: str
    recovered_bits: str
    votes: np.ndarray          # (bits, 2): trials voting 0 / 1 per bit
    latencies: np.ndarray      # (trials, bits, 2): probe/reload cycles per target
    evictions: np.ndarray      # (trials, bits, 2): lines seen evicted per target

    @property
    def accuracy(self) -> float:
        if not self.key_bits:
            return 0.0
        return sum(a == b for a, b in zip(self.key_bits, self.recovered_bits)) / len(self.key_bits)

    @property
    def correct(self) -> int:
        return sum(a == b for a, b in zip(self.key_bits, self.recovered_bits))

    def rows(self) -> list[dict]:
        return [{"bit": i, "true": int(t), "recovered": int(r),
                 "votes0": int(self.votes[i, 0]), "votes1": int(self.votes[i, 1])}
                for i, (t, r) in enumerate(zip(self.key_bits, self.recovered_bits))]

    def summary(self) -> dict:
        return {"kind": self.kind, "mode": self.mode, "key_bits": len(self.key_bits),
                "trials": int(self.latencies.shape[0]), "correct": self.correct,
                "accuracy": round(self.accuracy, 6), "key": self.key_bits,
                "recovered": self.recovered_bits}


def _empty_report(kind: str, s: AttackScenario) -> DetectionReport:
    z = np.zeros((s.trials, 0, 2), dtype=np.int64)
    return DetectionReport(kind, s.mode.value, "", "", np.zeros((0, 2), np.int64), z, z.copy())


def _decide(votes: np.ndarray) -> str:
    # ties resolve to 0, so a channel with no signal recovers a constant key
    return "".join("1" if v1 > v0 else "0" for v0, v1 in votes)


def eviction_set(set_index: int, cfg: CacheConfig, count: Optional[int] = None,
                 base: int = ATTACKER_BASE) -> list[int]:
    """``count`` attacker addresses congruent with ``set_index`` in ``cfg``."""
    count = cfg.num_ways if count is None else count
    way_span = cfg.num_sets * cfg.line_size_bytes
    return [base + j * way_span + set_index * cfg.line_size_bytes for j in range(count)]


def prime_probe(s: AttackScenario) -> DetectionReport:
    """Prime the L1 sets of both branch lines, let the victim run one bit, probe.

    The bit guess for a trial is whichever set lost more attacker lines;
    per-bit guesses are combined by majority over the trials.
    """
    key = s.victim.key_bits
    if not key:
        return _empty_report("prime-probe", s)
    att, vic = s.domains
    hier = Hierarchy(s.hierarchy)
    l1 = s.hierarchy.levels[0]
    l1_hit = hier.hit_latency(0)
    targets = [s.victim.addr_line5, s.victim.addr_line9]
    sets = [eviction_set((a >> l1.offset_bits) & (l1.num_sets - 1), l1) for a in targets]
    nbits = len(key)
    lat = np.zeros((s.trials, nbits, 2), dtype=np.int64)
    ev = np.zeros((s.trials, nbits, 2), dtype=np.int64)
    votes = np.zeros((nbits, 2), dtype=np.int64)
    for t in range(s.trials):
        for i, bit in enumerate(key):
            for lines in sets:
                for a in lines:
                    hier.access(a, att)
            if s.wait_model == "victim":
                hier.access(s.victim.addr_common, vic)
                hier.access(s.victim.branch_addr(bit), vic)
            for j, lines in enumerate(sets):
                for a in lines:
                    c = hier.access(a, att).latency_cycles
                    lat[t, i, j] += c
                    ev[t, i, j] += c > l1_hit
            m0, m1 = ev[t, i]
            votes[i, 1 if m1 > m0 else 0] += 1
    return DetectionReport("prime-probe", s.mode.value, key, _decide(votes), votes, lat, ev)


def flush_reload(s: AttackScenario) -> DetectionReport:
    """Flush both shared branch lines, let the victim run one bit, reload.

    A reload served from any cache level means someone brought the line back
    for the attacker's domain.  Under HybCache the attacker's flush and
    reload only ever reach its own copies.
    """
    key = s.victim.key_bits
    if not key:
        return _empty_report("flush-reload", s)
    att, vic = s.domains
    hier = Hierarchy(s.hierarchy)
    targets = [s.victim.addr_line5, s.victim.addr_line9]
    nbits = len(key)
    lat = np.zeros((s.trials, nbits, 2), dtype=np.int64)
    ev = np.zeros((s.trials, nbits, 2), dtype=np.int64)
    votes = np.zeros((nbits, 2), dtype=np.int64)
    for t in range(s.trials):
        for i, bit in enumerate(key):
            for a in targets:
                hier.flush(a, att)
            if s.wait_model == "victim":
                hier.access(s.victim.addr_common, vic)
                hier.access(s.victim.branch_addr(bit), vic)
            for j, a in enumerate(targets):
                o = hier.access(a, att)
                lat[t, i, j] = o.latency_cycles
                # ev counts reloads that *missed*, i.e. lines still flushed
                ev[t, i, j] = o.serviced_level == MEMORY
            hit0, hit1 = not ev[t, i, 0], not ev[t, i, 1]
            votes[i, 1 if (hit1 and not hit0) else 0] += 1
    return DetectionReport("flush-reload", s.mode.value, key, _decide(votes), votes, lat, ev)


# -- whole-subcache eviction -------------------------------------------------

def _coupon_trial(n: int, rng: SeededRng) -> int:
    seen = np.zeros(n, dtype=bool)
    have = 0
    offset = 0
    batch = int(n * harmonic(n) * 1.5) + 16
    while True:
        draws = rng.uniform_batch(n, batch)
        vals, first = np.unique(draws, return_index=True)
        fresh = ~seen[vals]
        if have + int(fresh.sum()) == n:
            return offset + int(first[fresh].max()) + 1
        seen[vals] = True
        have += int(fresh.sum())
        offset += batch


def _subcache_geometry(n: int) -> CacheConfig:
    sets = n & -n  # largest power of two dividing n
    iso = n // sets
    return CacheConfig("SUB", LINE, sets, iso + 1, iso, 0)


def _coupon_trial_cache(n: int, rng: SeededRng) -> int:
    # the same experiment played on a real cache level by an isolated attacker
    cfg = _subcache_geometry(n)
    cache = HybridCache(cfg, rng)
    hit = bytearray(n)
    remaining = n
    addr = ATTACKER_BASE
    count = 0
    while remaining:
        o = cache.lookup(addr, 1)
        addr += LINE
        count += 1
        e = subcache_entry(*o.filled_slot, cfg)
        if not hit[e]:
            hit[e] = 1
            remaining -= 1
    return count


def _eviction_chunk(n: int, seed: int, start: int, stop: int, via_cache: bool) -> list[int]:
    trial = _coupon_trial_cache if via_cache else _coupon_trial
    return [trial(n, SeededRng(seed, stream=t)) for t in range(start, stop)]


def evict_subcache_experiment(n_isolated: int, trials: int, seed: int = 0,
                              via_cache: bool = False, parallel: int = 1) -> np.ndarray:
    """Distinct-line accesses an isolated attacker needs to overwrite every subcache entry.

    Returns one sample per trial.  Trial ``t`` draws from its own generator
    stream, so the result does not depend on ``parallel``.  ``via_cache``
    replays the attacker through a :class:`HybridCache` instead of sampling
    the victim selector directly; both routes consume identical streams.
    """
    if n_isolated < 1 or trials < 1:
        raise ValueError("n_isolated and trials must be >= 1")
    if parallel <= 1:
        return np.array(_eviction_chunk(n_isolated, seed, 0, trials, via_cache), dtype=np.int64)
    bounds = np.linspace(0, trials, parallel + 1).astype(int)
    with ProcessPoolExecutor(parallel) as pool:
        parts = pool.map(_eviction_chunk, [n_isolated] * parallel, [seed] * parallel,
                         bounds[:-1].tolist(), bounds[1:].tolist(), [via_cache] * parallel)
        return np.concatenate([np.asarray(p, dtype=np.int64) for p in parts])


# -- occupancy channel -------------------------------------------------------

@dataclass
class OccupancyReport:
    sizes: list[int]
    survivals: np.ndarray      # (len(sizes), trials)
    fill_counts: np.ndarray    # (len(sizes), trials)
    rank_correlation: float    # working-set size vs attacker survivals

    @property
    def mean_survivals(self) -> np.ndarray:
        return self.survivals.mean(axis=1)

    @property
    def evictions(self) -> np.ndarray:
        return self.fill_counts - self.survivals

    @property
    def eviction_correlation(self) -> float:
        k = np.repeat(self.sizes, self.survivals.shape[1])
        return rank_correlation(k, self.evictions.ravel())

    def rows(self) -> list[dict]:
        return [{"working_set": k, "mean_fill": round(float(f.mean()), 4),
                 "mean_survivals": round(float(sv.mean()), 4),
                 "mean_evictions": round(float((f - sv).mean()), 4)}
                for k, sv, f in zip(self.sizes, self.survivals, self.fill_counts)]


def _occupancy_trial(cfg: CacheConfig, att: int, vic: int, k: int, victim_base: int,
                     rng: SeededRng) -> tuple[int, int]:
    cache = HybridCache(cfg, rng)
    n_fill = cfg.n_isolated if att else cfg.num_sets * cfg.num_ways
    mine = [ATTACKER_BASE + i * LINE for i in range(n_fill)]
    for a in mine:
        cache.lookup(a, att)
    resident = [a for a in mine if cache.probe(a, att)]
    for i in range(k):
        cache.lookup(victim_base + i * LINE, vic)
    return len(resident), sum(cache.probe(a, att) for a in resident)


def occupancy_probe(s: AttackScenario, working_set_sizes: Sequence[int],
                    victim_base: int = VICTIM_DATA_BASE, variant: int = 0) -> OccupancyReport:
    """Attacker fills the L1, victim touches ``k`` distinct lines, attacker counts survivors.

    An isolated attacker fills the subcache with ``n_isolated`` lines; a
    non-isolated one fills the whole level.  ``variant`` picks a disjoint
    family of generator streams so two runs are statistically independent.
    """
    att, vic = s.domains
    cfg = s.hierarchy.levels[0]
    sizes = list(working_set_sizes)
    surv = np.zeros((len(sizes), s.trials), dtype=np.int64)
    fill = np.zeros_like(surv)
    for i, k in enumerate(sizes):
        for t in range(s.trials):
            rng = SeededRng(s.seed, stream=(variant << 40) | (i << 20) | t)
            fill[i, t], surv[i, t] = _occupancy_trial(cfg, att, vic, k, victim_base, rng)
    corr = rank_correlation(np.repeat(sizes, s.trials), surv.ravel())
    return OccupancyReport(sizes, surv, fill, corr)


def eviction_position_histograms(trials: int, seed: int = 0, cfg: CacheConfig = L1_DEFAULT,
                                 victim: Optional[VictimSpec] = None,
                                 attacker_idid: int = 2, victim_idid: int = 1) -> np.ndarray:
    """Which subcache entry a victim fill lands in, split by the victim's key bit.

    An isolated attacker first fills the subcache.  Each trial the victim
    fetches the branch line for bit ``t % 2``, the landing entry is recorded,
    and the victim flushes the line so the next fetch misses again.  Returns
    counts of shape (2, n_isolated).
    """
    victim = victim or VictimSpec("01")
    out = np.zeros((2, cfg.n_isolated), dtype=np.int64)
    cache = HybridCache(cfg, SeededRng(seed))
    addr = ATTACKER_BASE
    while len(cache) < cfg.n_isolated:
        cache.lookup(addr, attacker_idid)
        addr += LINE
    for t in range(trials):
        bit = t & 1
        line = victim.branch_addr(str(bit))
        o = cache.lookup(line, victim_idid)
        out[bit, subcache_entry(*o.filled_slot, cfg)] += 1
        cache.flush(line, victim_idid)
    return out


def default_scenario(mode: Mode, key_bits: int = 64, trials: int = 20, seed: int = 7,
                     attacker_idid: int = 0, victim_idid: int = 1, wait_model: str = "victim"
                     ) -> AttackScenario:
    return AttackScenario(mode, VictimSpec(random_key(key_bits, seed)), attacker_idid,
                          victim_idid, trials, seed, wait_model)
