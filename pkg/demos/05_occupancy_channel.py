# The one channel HybCache leaves open: how much of the subcache the victim uses.
from hybsim.analysis import compare_samples
from hybsim.attacks import Mode, default_scenario, occupancy_probe

s = default_scenario(Mode.HYBCACHE, key_bits=1, trials=40, seed=8, attacker_idid=2, victim_idid=1)
r = occupancy_probe(s, [0, 16, 32, 64, 128, 256, 512])
for row in r.rows():
    print(row)
print(f"rank correlation (victim working set vs attacker survivors): {r.rank_correlation:.3f}")

# ...but not where the victim's data lives
a = occupancy_probe(s, [96])
b = occupancy_probe(s, [96], victim_base=0x5A00000, variant=1)
t = compare_samples(a.survivals[0], b.survivals[0])
print(f"different victim addresses, same size: chi2 {t.statistic:.2f} (critical {t.critical(0.001):.2f})")
