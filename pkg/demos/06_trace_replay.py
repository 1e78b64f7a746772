# Replay a two-process trace file and compare conventional vs HybCache per domain.
from pathlib import Path

from hybsim import Hierarchy, replay
from hybsim.cli import load_hierarchy_config
from hybsim.workload import bundled_mixes, compare_runs, read_trace

here = Path(__file__).parent
cfg = load_hierarchy_config(str(here / "data" / "hierarchy.cfg"), seed=1)
dmap, records = read_trace(here / "data" / "two_process.trace")
print(f"{len(records)} records, domains {dmap.idids}, shared region {dmap.shared}")

stats = replay(Hierarchy(cfg), dmap, records)
for row in stats.rows():
    print(row)
print("blocked accesses per domain:", dict(stats.violations))

# bundled synthetic mixes: pid 1 isolated, pid 2 not
for name, (dm, recs) in bundled_mixes().items():
    base, hyb = compare_runs(lambda: Hierarchy(cfg), dm, recs, warmup=0.5)
    print(f"\n{name}")
    for d in (0, 1):
        misses = [(base.cell(k, d).misses, hyb.cell(k, d).misses) for k in range(3)]
        print(f"  idid {d}: misses (base, hyb) per level {misses}  "
              f"AMAT {base.amat(0, d):.1f} -> {hyb.amat(0, d):.1f}")
