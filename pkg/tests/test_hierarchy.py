import random

import pytest

from hybsim.geometry import CacheConfig
from hybsim.hierarchy import MEMORY, Hierarchy, HierarchyConfig, build_hierarchy

A = 0x20040


@pytest.fixture
def hier():
    return build_hierarchy(seed=5)


def test_cold_then_warm(hier):
    o = hier.access(A, 0)
    assert o.serviced_level == MEMORY and o.from_memory
    assert o.latency_cycles == 4 + 12 + 42 + 100
    o = hier.access(A, 0)
    assert o.serviced_level == 0 and o.latency_cycles == 4


def test_fill_on_return_from_l3(hier):
    hier.access(A, 0)
    hier.levels[0].flush(A, 0)
    hier.levels[1].flush(A, 0)
    assert hier.probe(A, 0) == 2
    o = hier.access(A, 0)
    assert o.serviced_level == 2 and o.latency_cycles == 4 + 12 + 42
    assert hier.levels[0].probe(A, 0) and hier.levels[1].probe(A, 0)


def test_fills_carry_idid(hier):
    hier.access(A, 6)
    assert all(level.probe(A, 6) and not level.probe(A, 0) for level in hier.levels)


def test_flush_every_level(hier):
    hier.access(A, 2)
    assert [f.invalidated for f in hier.flush(A, 1)] == [False] * 3
    assert [f.invalidated for f in hier.flush(A, 2)] == [True] * 3
    assert hier.probe(A, 2) == MEMORY
    hier.access(A, 1, write=True)
    fl = hier.flush(A, 1)
    assert fl[0].writeback == A >> 6 and fl[1].writeback is None


def test_stats_fresh_and_cold(hier):
    rows = hier.stats().rows()
    assert [r["level"] for r in rows] == ["L1", "L2", "L3"]
    assert all(r["accesses"] == r["misses"] == r["evictions"] == 0 for r in rows)
    hier.access(A, 3)
    st = hier.stats()
    assert [st.cell(k, 3).misses for k in range(3)] == [1, 1, 1]
    assert st.memory_fetches[3] == 1


def test_repeated_reads(hier):
    for _ in range(10):
        hier.access(A, 0)
    assert hier.stats().cell(0, 0).hits == 9
    hier.reset_stats()
    assert hier.stats().cell(0, 0).accesses == 0


def small_hierarchy(seed=0):
    levels = (CacheConfig("L1", 64, 16, 4, 2, 2), CacheConfig("L2", 64, 32, 4, 1, 7),
              CacheConfig("L3", 64, 64, 8, 2, 20))
    return Hierarchy(HierarchyConfig(levels, 80, seed))


def test_latency_conservation_and_amat():
    h = small_hierarchy(9)
    rng = random.Random(4)
    total = {}
    for _ in range(20_000):
        idid = rng.choice([0, 0, 1, 2, 3])
        o = h.access(rng.randrange(0, 1 << 16) * 64, idid, rng.random() < 0.3)
        lat = [2, 7, 20]
        k = len(o.level_outcomes)
        assert o.latency_cycles == sum(lat[:k]) + (80 if o.from_memory else 0)
        total[idid] = total.get(idid, 0) + o.latency_cycles
    st = h.stats()
    for d in total:
        hits = sum(st.cell(k, d).hits for k in range(3))
        assert hits + st.memory_fetches[d] == st.cell(0, d).accesses
        assert st.amat(0, d) == pytest.approx(total[d] / st.cell(0, d).accesses)
    assert sum(st.cell(0, d).accesses for d in total) == 20_000


def test_writeback_marks_lower_copy_dirty():
    h = Hierarchy(HierarchyConfig((CacheConfig("L1", 64, 1, 1, 1, 1),
                                   CacheConfig("L2", 64, 1, 4, 1, 2)), 10))
    h.access(0, 0, write=True)
    o = h.access(64, 0)
    assert o.level_outcomes[0].writeback == 0
    assert h.stats().cell(0, 0).writebacks == 1
    # L2 now holds the dirty data and writes it back when it is evicted
    for i in range(2, 4):
        h.access(i * 64, 0)
    o = h.access(4 * 64, 0)
    assert o.level_outcomes[1].writeback == 0


def test_hit_latency_table(hier):
    assert [hier.hit_latency(k) for k in (0, 1, 2, MEMORY)] == [4, 16, 58, 158]


def test_config_needs_levels():
    with pytest.raises(ValueError):
        HierarchyConfig(())
