import pytest
from hypothesis import given, strategies as st

from hybsim.cache import AccessKind, AccessRequest
from hybsim.hierarchy import build_hierarchy
from hybsim.workload import (DomainMap, TraceParseError, TraceRecord, VictimSpec, Violation,
                             ViolationKind, apply_io_rules, bundled_mixes, format_trace,
                             gen_montgomery_victim, gen_pointer_chase, gen_uniform,
                             gen_working_set, interleave, parse_trace, replay)

R = AccessKind.READ


def test_parse_minimal():
    dmap, recs = parse_trace("domain 1 0\n1 R 20040\n")
    assert dmap.idid_of(1) == 0
    assert recs == [TraceRecord(1, R, 0x20040)]


def test_parse_errors_carry_line_number():
    with pytest.raises(TraceParseError) as exc:
        parse_trace("# header\ndomain 1 2\n1 R 40\n1 X 80\n")
    assert exc.value.line_no == 4 and "unknown op" in exc.value.reason
    for bad in ["domain 1 16\n", "1 R zz\n", "1 R 400000000000\n", "shared 10 5\n",
                "shared 0 10\nshared 20 30\n", "1 R\n", "1 R 0\ndomain 2 1\n", "x R 0\n",
                "domain 1 1\ndomain 1 2\n"]:
        with pytest.raises(TraceParseError):
            parse_trace(bad)


def test_parse_shared_region_and_io():
    text = "domain 3 3\nshared 1000 2000\n3 IR 1040\n3 W 1080\n3 IW 4000\n9 R 1000\n"
    dmap, recs = parse_trace(text)
    assert dmap.shared == (0x1000, 0x2000)
    out = [apply_io_rules(r, dmap) for r in recs]
    assert out[0] == AccessRequest(3, 0, R, 0x1040)
    assert out[1] == Violation(ViolationKind.REGULAR_ACCESS_TO_SHARED_REGION, recs[1])
    assert out[2] == Violation(ViolationKind.IO_MOVE_OUTSIDE_REGION, recs[2])
    assert out[3] == AccessRequest(9, 0, R, 0x1000)


def test_io_write_becomes_write():
    dmap = DomainMap({1: 4}, (0, 0x100))
    req = apply_io_rules(TraceRecord(1, AccessKind.IO_WRITE, 0x40), dmap)
    assert req == AccessRequest(1, 0, AccessKind.WRITE, 0x40)


@given(st.integers(0, 15), st.sampled_from(list(AccessKind)), st.integers(0, 0x3000))
def test_no_isolated_request_inside_region(idid, op, addr):
    dmap = DomainMap({1: idid}, (0x1000, 0x2000))
    out = apply_io_rules(TraceRecord(1, op, addr), dmap)
    if isinstance(out, AccessRequest) and dmap.in_shared(addr) and out.kind is not AccessKind.FLUSH:
        assert out.idid == 0


records = st.lists(st.builds(TraceRecord, st.integers(0, 99), st.sampled_from(list(AccessKind)),
                             st.integers(0, (1 << 46) - 1)), max_size=50)


@given(st.dictionaries(st.integers(0, 99), st.integers(0, 15), max_size=5), records,
       st.one_of(st.none(), st.tuples(st.integers(0, 1000), st.integers(1, 1000))))
def test_format_parse_round_trip(idids, recs, shared):
    if shared is not None:
        shared = (shared[0], shared[0] + shared[1])
    dmap = DomainMap(idids, shared)
    text = format_trace(dmap, recs)
    assert parse_trace(text) == (dmap, recs)
    assert format_trace(*parse_trace(text)) == text


def test_montgomery_trace():
    spec = VictimSpec("0")
    assert [r.addr for r in gen_montgomery_victim(spec)] == [spec.addr_common, spec.addr_line5]
    spec = VictimSpec("1")
    assert [r.addr for r in gen_montgomery_victim(spec)] == [spec.addr_common, spec.addr_line9]
    spec = VictimSpec("101")
    c, l5, l9 = spec.addr_common, spec.addr_line5, spec.addr_line9
    assert [r.addr for r in gen_montgomery_victim(spec)] == [c, l9, c, l5, c, l9]
    with pytest.raises(ValueError):
        gen_montgomery_victim(VictimSpec(""))


@given(st.text("01", min_size=1, max_size=64))
def test_montgomery_length(key):
    assert len(gen_montgomery_victim(VictimSpec(key))) == 2 * len(key)


def test_victim_spec_validation():
    with pytest.raises(ValueError):
        VictimSpec("012")
    with pytest.raises(ValueError):
        VictimSpec("01", addr_line5=0x1000, addr_line9=0x1010)
    spec = VictimSpec("0")
    assert (spec.addr_line5 >> 6) % 128 != (spec.addr_line9 >> 6) % 128


def test_generators_deterministic():
    assert gen_uniform(0, (0, 4096)) == []
    a = gen_uniform(500, (0x1000, 0x9000), 0.5, seed=3, pid=2)
    assert a == gen_uniform(500, (0x1000, 0x9000), 0.5, seed=3, pid=2)
    assert a != gen_uniform(500, (0x1000, 0x9000), 0.5, seed=4, pid=2)
    assert all(0x1000 <= r.addr < 0x9000 and r.addr % 64 == 0 and r.pid == 2 for r in a)
    assert {r.op for r in a} == {AccessKind.READ, AccessKind.WRITE}
    assert all(r.op is R for r in gen_uniform(100, (0, 4096), 1.0))
    with pytest.raises(ValueError):
        gen_uniform(-1, (0, 64))


def test_pointer_chase_visits_cycle():
    t = gen_pointer_chase(20, 10, base=0x100, seed=1)
    lines = [(r.addr - 0x100) // 64 for r in t]
    assert sorted(lines[:10]) == list(range(10))
    assert lines[10:] == lines[:10]


def test_working_set_mostly_hot():
    t = gen_working_set(2000, 50, hot_fraction=0.9, seed=2)
    hot = sum(r.addr < 50 * 64 for r in t)
    assert 1700 < hot < 1900


def test_interleave():
    a = [TraceRecord(1, R, i) for i in range(3)]
    b = [TraceRecord(2, R, 100 + i) for i in range(5)]
    assert interleave([a, b], 1) == [a[0], b[0], a[1], b[1], a[2], b[2], b[3], b[4]]
    assert interleave([a, b], 2) == a[:2] + b[:2] + a[2:] + b[2:4] + b[4:]
    with pytest.raises(ValueError):
        interleave([], 1)
    with pytest.raises(ValueError):
        interleave([a], 0)


def test_replay_counts_violations_and_blocks():
    text = "domain 1 2\nshared 0 1000\n1 R 40\n1 IR 80\n1 IW 5000\n2 R 40\n1 F 40\n"
    dmap, recs = parse_trace(text)
    h = build_hierarchy()
    st = replay(h, dmap, recs)
    assert st.violations[2] == 2
    assert st.cell(0, 2).accesses == 1 and st.cell(0, 0).accesses == 1
    assert h.levels[0].probe(0x80, 0) and not h.levels[0].probe(0x40, 2)


def test_bundled_mixes_shape():
    mixes = bundled_mixes(accesses=100)
    assert len(mixes) >= 4
    for dmap, recs in mixes.values():
        assert dmap.isolated_pids() == [1]
        assert len(recs) == 200
