"""Trace files, domain assignment, synthetic workloads and trace replay.

Trace format (UTF-8, one item per line)::

    # comment
    domain <pid> <idid>          header: assign a process to a domain
    shared <start-hex> <end-hex> header: half-open region reserved for I/O moves
    <pid> <R|W|F|IR|IW> <addr-hex>

Processes without a ``domain`` line run in the non-isolated domain (idid 0).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .cache import MAX_IDID, AccessKind, AccessRequest
from .replacement import SeededRng

LINE = 64


class TraceParseError(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


@dataclass(frozen=True)
class TraceRecord:
    pid: int
    op: AccessKind
    addr: int


@dataclass
class DomainMap:
    idids: dict[int, int] = field(default_factory=dict)
    shared: Optional[tuple[int, int]] = None

    def idid_of(self, pid: int) -> int:
        return self.idids.get(pid, 0)

    def in_shared(self, addr: int) -> bool:
        return self.shared is not None and self.shared[0] <= addr < self.shared[1]

    def isolated_pids(self) -> list[int]:
        return sorted(p for p, d in self.idids.items() if d != 0)


class ViolationKind(enum.Enum):
    REGULAR_ACCESS_TO_SHARED_REGION = "RegularAccessToSharedRegion"
    IO_MOVE_OUTSIDE_REGION = "IoMoveOutsideRegion"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    record: TraceRecord


# -- parsing -----------------------------------------------------------------

_OPS = {k.value: k for k in AccessKind}


def _hex(tok: str, line_no: int) -> int:
    try:
        return int(tok, 16)
    except ValueError:
        raise TraceParseError(line_no, f"bad hex address {tok!r}") from None


def _dec(tok: str, line_no: int, what: str) -> int:
    if not tok.isdigit():
        raise TraceParseError(line_no, f"bad {what} {tok!r}")
    return int(tok)


def parse_trace(lines: Union[str, Iterable[str]], addr_bits: int = 46
                ) -> tuple[DomainMap, list[TraceRecord]]:
    """Parse trace text into its domain map and body records.

    Records that break the I/O-move rules are kept; :func:`apply_io_rules`
    flags them at replay time.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    dmap = DomainMap()
    records: list[TraceRecord] = []
    limit = 1 << addr_bits
    for line_no, raw in enumerate(lines, 1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        tok = text.split()
        if tok[0] == "domain":
            if len(tok) != 3:
                raise TraceParseError(line_no, "expected 'domain <pid> <idid>'")
            if records:
                raise TraceParseError(line_no, "domain line after trace records")
            pid = _dec(tok[1], line_no, "pid")
            idid = _dec(tok[2], line_no, "idid")
            if idid > MAX_IDID:
                raise TraceParseError(line_no, f"idid {idid} outside [0, {MAX_IDID}]")
            if pid in dmap.idids:
                raise TraceParseError(line_no, f"pid {pid} assigned twice")
            dmap.idids[pid] = idid
        elif tok[0] == "shared":
            if len(tok) != 3:
                raise TraceParseError(line_no, "expected 'shared <start> <end>'")
            if records:
                raise TraceParseError(line_no, "shared line after trace records")
            if dmap.shared is not None:
                raise TraceParseError(line_no, "more than one shared region")
            start, end = _hex(tok[1], line_no), _hex(tok[2], line_no)
            if not start < end <= limit:
                raise TraceParseError(line_no, "empty or out-of-range shared region")
            dmap.shared = (start, end)
        else:
            if len(tok) != 3:
                raise TraceParseError(line_no, "expected '<pid> <op> <addr>'")
            pid = _dec(tok[0], line_no, "pid")
            op = _OPS.get(tok[1])
            if op is None:
                raise TraceParseError(line_no, f"unknown op {tok[1]!r}")
            addr = _hex(tok[2], line_no)
            if addr >= limit:
                raise TraceParseError(line_no, f"address {tok[2]} exceeds {addr_bits} bits")
            records.append(TraceRecord(pid, op, addr))
    return dmap, records


def format_trace(dmap: DomainMap, records: Iterable[TraceRecord]) -> str:
    """Canonical text form; ``parse_trace(format_trace(m, r)) == (m, r)``."""
    out = [f"domain {pid} {idid}" for pid, idid in sorted(dmap.idids.items())]
    if dmap.shared is not None:
        out.append(f"shared {dmap.shared[0]:x} {dmap.shared[1]:x}")
    out.extend(f"{r.pid} {r.op.value} {r.addr:x}" for r in records)
    return "\n".join(out) + "\n"


def read_trace(path, addr_bits: int = 46) -> tuple[DomainMap, list[TraceRecord]]:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh, addr_bits)


# -- I/O-move rules ----------------------------------------------------------

def apply_io_rules(rec: TraceRecord, dmap: DomainMap) -> Union[AccessRequest, Violation]:
    """Turn a record into a request, or a Violation if it must be blocked.

    I/O moves must target the shared region and are cached as idid 0.
    Isolated processes may not touch the shared region with ordinary loads
    and stores.
    """
    idid = dmap.idid_of(rec.pid)
    inside = dmap.in_shared(rec.addr)
    if rec.op in (AccessKind.IO_READ, AccessKind.IO_WRITE):
        if not inside:
            return Violation(ViolationKind.IO_MOVE_OUTSIDE_REGION, rec)
        kind = AccessKind.READ if rec.op is AccessKind.IO_READ else AccessKind.WRITE
        return AccessRequest(rec.pid, 0, kind, rec.addr)
    if inside and idid != 0 and rec.op in (AccessKind.READ, AccessKind.WRITE):
        return Violation(ViolationKind.REGULAR_ACCESS_TO_SHARED_REGION, rec)
    return AccessRequest(rec.pid, idid, rec.op, rec.addr)


def replay(hier, dmap: DomainMap, records: Iterable[TraceRecord], isolate: bool = True):
    """Run ``records`` through ``hier`` and return its StatsTable.

    Counters are booked under each process's mapped domain.  With
    ``isolate=False`` every request travels as idid 0, which is the
    conventional-cache baseline for the same trace.  Violations are counted
    per domain and not serviced.
    """
    stats = hier.stats()
    for rec in records:
        req = apply_io_rules(rec, dmap)
        account = dmap.idid_of(rec.pid)
        if isinstance(req, Violation):
            stats.violations[account] += 1
            continue
        idid = req.idid if isolate else 0
        if req.kind is AccessKind.FLUSH:
            hier.flush(req.addr, idid)
        else:
            hier.access(req.addr, idid, req.kind is AccessKind.WRITE, account=account)
    return stats


# -- victim model ------------------------------------------------------------

@dataclass(frozen=True)
class VictimSpec:
    """Montgomery-ladder victim reduced to its three instruction-fetch lines."""

    key_bits: str
    addr_line5: int = 0x400140   # bit == 0 branch body
    addr_line9: int = 0x400240   # bit == 1 branch body
    addr_common: int = 0x400000  # loop head, fetched for every bit

    def __post_init__(self):
        if set(self.key_bits) - {"0", "1"}:
            raise ValueError("key_bits must be a string of 0/1")
        lines = {self.addr_line5 // LINE, self.addr_line9 // LINE, self.addr_common // LINE}
        if len(lines) != 3:
            raise ValueError("victim addresses must lie on distinct cache lines")

    def branch_addr(self, bit: str) -> int:
        return self.addr_line5 if bit == "0" else self.addr_line9


def gen_montgomery_victim(spec: VictimSpec, pid: int = 1) -> list[TraceRecord]:
    """Fetch trace of the ladder loop, most significant key bit first."""
    if not spec.key_bits:
        raise ValueError("empty key")
    out = []
    for bit in spec.key_bits:
        out.append(TraceRecord(pid, AccessKind.READ, spec.addr_common))
        out.append(TraceRecord(pid, AccessKind.READ, spec.branch_addr(bit)))
    return out


def random_key(nbits: int, seed: int) -> str:
    rng = SeededRng(seed, stream=0x6B6579)
    return "".join(str(rng.next_uniform(2)) for _ in range(nbits))


# -- synthetic workloads -----------------------------------------------------

def _ops(rng: SeededRng, n: int, rw_ratio: float) -> list[AccessKind]:
    # rw_ratio is the fraction of reads
    cut = int(rw_ratio * (1 << 32))
    return [AccessKind.READ if (rng.next_u64() >> 32) < cut else AccessKind.WRITE
            for _ in range(n)]


def gen_uniform(num_accesses: int, addr_range: tuple[int, int], rw_ratio: float = 1.0,
                seed: int = 0, pid: int = 0) -> list[TraceRecord]:
    """Line-aligned addresses drawn uniformly from ``[start, end)``."""
    if num_accesses < 0:
        raise ValueError("negative access count")
    start, end = addr_range
    nlines = (end - start) // LINE
    if num_accesses and nlines < 1:
        raise ValueError("address range smaller than one line")
    rng = SeededRng(seed, stream=1)
    lines = rng.uniform_batch(nlines, num_accesses) if num_accesses else []
    ops = _ops(rng, num_accesses, rw_ratio)
    return [TraceRecord(pid, op, start + int(x) * LINE) for op, x in zip(ops, lines)]


def gen_pointer_chase(num_accesses: int, num_lines: int, base: int = 0,
                      seed: int = 0, pid: int = 0) -> list[TraceRecord]:
    """Reads following one random cycle through ``num_lines`` lines."""
    if num_accesses < 0 or num_lines < 1:
        raise ValueError("positive sizes required")
    rng = SeededRng(seed, stream=2)
    order = list(range(num_lines))
    for i in range(num_lines - 1, 0, -1):
        j = rng.next_uniform(i + 1)
        order[i], order[j] = order[j], order[i]
    return [TraceRecord(pid, AccessKind.READ, base + order[i % num_lines] * LINE)
            for i in range(num_accesses)]


def gen_working_set(num_accesses: int, hot_lines: int, base: int = 0, hot_fraction: float = 0.9,
                    rw_ratio: float = 0.8, seed: int = 0, pid: int = 0) -> list[TraceRecord]:
    """Mostly hits a small hot set; the rest streams through fresh lines."""
    if num_accesses < 0 or hot_lines < 1:
        raise ValueError("positive sizes required")
    rng = SeededRng(seed, stream=3)
    cut = int(hot_fraction * (1 << 32))
    ops = _ops(rng, num_accesses, rw_ratio)
    out = []
    cold = hot_lines
    for op in ops:
        if (rng.next_u64() >> 32) < cut:
            line = rng.next_uniform(hot_lines)
        else:
            line, cold = cold, cold + 1
        out.append(TraceRecord(pid, op, base + line * LINE))
    return out


def interleave(traces: Sequence[Sequence[TraceRecord]], quantum: int = 1) -> list[TraceRecord]:
    """Round-robin ``quantum`` records at a time, keeping each trace's order."""
    if not traces or quantum < 1:
        raise ValueError("need at least one trace and quantum >= 1")
    out: list[TraceRecord] = []
    pos = [0] * len(traces)
    while True:
        progressed = False
        for i, t in enumerate(traces):
            if pos[i] < len(t):
                out.extend(t[pos[i]: pos[i] + quantum])
                pos[i] += quantum
                progressed = True
        if not progressed:
            return out


def bundled_mixes(accesses: int = 40_000, seed: int = 1) -> dict[str, tuple[DomainMap, list[TraceRecord]]]:
    """Two-process synthetic mixes: pid 1 is isolated (idid 1), pid 2 is not.

    Each process issues ``accesses`` records; the traces are interleaved
    four records at a time.
    """
    dmap = DomainMap({1: 1, 2: 0})
    a, b = 0x10000000, 0x40000000
    mib = 1 << 20
    gens = {
        "chase+uniform": (
            lambda: gen_pointer_chase(accesses, 2048, a, seed, 1),
            lambda: gen_uniform(accesses, (b, b + 2 * mib), 0.7, seed + 1, 2)),
        "workset+chase": (
            lambda: gen_working_set(accesses, 512, a, seed=seed, pid=1),
            lambda: gen_pointer_chase(accesses, 6000, b, seed + 1, 2)),
        "uniform+workset": (
            lambda: gen_uniform(accesses, (a, a + 8 * mib), 0.8, seed, 1),
            lambda: gen_working_set(accesses, 3000, b, seed=seed + 1, pid=2)),
        "uniform+uniform": (
            lambda: gen_uniform(accesses, (a, a + 8 * mib), 0.8, seed, 1),
            lambda: gen_uniform(accesses, (b, b + 8 * mib), 0.8, seed + 1, 2)),
    }
    return {name: (dmap, interleave([f1(), f2()], quantum=4)) for name, (f1, f2) in gens.items()}


def compare_runs(make_hierarchy, dmap: DomainMap, records: Sequence[TraceRecord],
                 warmup: float = 0.0):
    """Replay ``records`` as a conventional cache and as HybCache.

    ``make_hierarchy`` builds a fresh hierarchy per run.  Counters are
    cleared after the first ``warmup`` fraction of the trace.  Returns
    ``(baseline_stats, hybcache_stats)``.
    """
    cut = int(len(records) * warmup)
    out = []
    for isolate in (False, True):
        hier = make_hierarchy()
        if cut:
            replay(hier, dmap, records[:cut], isolate)
            hier.reset_stats()
        out.append(replay(hier, dmap, records[cut:], isolate))
    return tuple(out)
