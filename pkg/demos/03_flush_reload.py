# Flush+Reload on lines the attacker shares with the victim (a shared library).
from hybsim.attacks import Mode, default_scenario, flush_reload

for mode in Mode:
    r = flush_reload(default_scenario(mode, key_bits=64, trials=20, seed=7))
    reload_hits = 1 - r.evictions.mean()
    print(f"{mode.value:9} accuracy {r.accuracy:.3f}  reload hit rate {reload_hits:.3f}")

# Control: nobody touches the lines between flush and reload.
r = flush_reload(default_scenario(Mode.BASELINE, 64, 5, seed=7, wait_model="idle"))
print(f"idle victim: recovered bits {set(r.recovered_bits)}, reload hit rate {1 - r.evictions.mean():.3f}")
