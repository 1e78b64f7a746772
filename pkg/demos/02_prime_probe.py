# Prime+Probe against the Montgomery-ladder victim, conventional cache vs HybCache.
from hybsim.analysis import null_interval
from hybsim.attacks import Mode, default_scenario, prime_probe

for mode in Mode:
    report = prime_probe(default_scenario(mode, key_bits=64, trials=20, seed=7))
    print(f"{mode.value:9} accuracy {report.accuracy:.3f}")
    print(f"  key       {report.key_bits}")
    print(f"  recovered {report.recovered_bits}")
    # lines the attacker saw evicted from the bit-0 / bit-1 set, trial 0, first 8 bits
    print("  evictions (bit0 set, bit1 set):", report.evictions[0, :8].tolist())

lo, hi = null_interval(64)
print(f"guessing interval at 99%: [{lo:.3f}, {hi:.3f}]")

# An isolated attacker cannot even target a set: its lines go to random subcache slots.
r = prime_probe(default_scenario(Mode.HYBCACHE, 64, 20, seed=7, attacker_idid=4))
print(f"isolated attacker accuracy {r.accuracy:.3f}")
