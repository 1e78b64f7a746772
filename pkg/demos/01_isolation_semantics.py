# How one HybCache level treats the same address from different domains.
from hybsim import AccessKind, AccessRequest, HybridCache, SeededRng, decompose
from hybsim.geometry import L1_DEFAULT

cfg = L1_DEFAULT
addr = 0x20040

# address slicing for the 64 KB, 8-way, 128-set L1
parts = decompose(addr, cfg)
print(f"{addr:#x}: offset={parts.offset} set={parts.set_index} "
      f"tag={parts.set_tag:#x} extended tag={parts.extended_tag:#x}")
print(f"subcache: {cfg.iso_ways} ways x {cfg.num_sets} sets = {cfg.n_isolated} entries")

cache = HybridCache(cfg, SeededRng(1))


def show(idid, note):
    o = cache.access(AccessRequest(pid=idid, idid=idid, kind=AccessKind.READ, addr=addr))
    where = f" -> slot {o.filled_slot}" if o.filled_slot else ""
    print(f"  idid {idid:>2} read: {o.verdict.value:4}{where}   ({note})")


show(0, "non-isolated, lands in its set by LRU")
show(0, "same domain hits")
show(3, "isolated domain cannot hit the NI copy")
show(3, "its own copy sits in a random subcache slot and hits")
show(5, "another isolated domain gets a separate copy")

# flushing is scoped to the caller's own copy
print("  flush by idid 7:", cache.flush(addr, 7))
print("  flush by idid 3:", cache.flush(addr, 3))
print("  idid 5 still cached:", cache.probe(addr, 5))
