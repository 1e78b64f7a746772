"""Command-line driver: ``hybsim {simulate,attack,evict-stats,compare}``.

Exit status is 0 on success, 1 when a trace or config cannot be used, and 2
for usage errors.  ``HYBSIM_SEED`` overrides the default seed.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
from typing import Optional, Sequence

from .analysis import binomial_ci, coupon_stats
from .attacks import Mode, default_scenario, evict_subcache_experiment, flush_reload, \
    occupancy_probe, prime_probe
from .geometry import CacheConfig, ConfigError
from .hierarchy import STATS_COLUMNS, Hierarchy, HierarchyConfig
from .workload import TraceParseError, bundled_mixes, compare_runs, read_trace, replay

DEFAULT_SEED = 1

_LEVEL_KEYS = {
    "line_size": "line_size_bytes", "sets": "num_sets", "ways": "num_ways",
    "iso_ways": "iso_ways", "hit_latency": "hit_latency_cycles", "addr_bits": "addr_bits",
}


class UsageError(Exception):
    pass


def load_hierarchy_config(path: Optional[str], seed: int) -> HierarchyConfig:
    """Read an INI-style hierarchy file; every section except [hierarchy] is a level.

    Levels appear closest first, in file order::

        [hierarchy]
        memory_latency = 100

        [L1]
        sets = 128
        ways = 8
        iso_ways = 2
        hit_latency = 4
    """
    if path is None:
        return HierarchyConfig(seed=seed)
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    memory = 100
    levels = []
    for name in parser.sections():
        sec = parser[name]
        if name.lower() == "hierarchy":
            memory = sec.getint("memory_latency", memory)
            if "seed" in sec and "HYBSIM_SEED" not in os.environ:
                seed = sec.getint("seed")
            continue
        kwargs = {"level_name": name}
        for key, value in sec.items():
            if key not in _LEVEL_KEYS:
                raise ConfigError(f"[{name}]: unknown key {key!r}")
            kwargs[_LEVEL_KEYS[key]] = int(value, 0)
        levels.append(CacheConfig(**kwargs))
    if not levels:
        raise ConfigError(f"{path}: no cache levels defined")
    return HierarchyConfig(tuple(levels), memory, seed)


def emit(rows: list[dict], fmt: str, out, columns: Optional[Sequence[str]] = None) -> None:
    if fmt == "json":
        json.dump(rows, out, indent=1)
        out.write("\n")
        return
    columns = list(columns or (rows[0].keys() if rows else []))
    w = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HYBSIM_SEED")
    if env is not None:
        try:
            return int(env, 0)
        except ValueError:
            raise UsageError(f"HYBSIM_SEED={env!r} is not an integer") from None
    return DEFAULT_SEED


def cmd_simulate(args, out) -> int:
    cfg = load_hierarchy_config(args.config, _seed(args))
    dmap, records = read_trace(args.trace, cfg.levels[0].addr_bits)
    hier = Hierarchy(cfg)
    stats = replay(hier, dmap, records, isolate=not args.baseline)
    emit(stats.rows(), args.format, out, STATS_COLUMNS)
    for idid, n in sorted(stats.violations.items()):
        print(f"violations idid={idid}: {n}", file=sys.stderr)
    return 0


def cmd_attack(args, out) -> int:
    seed = _seed(args)
    mode = Mode(args.mode)
    s = default_scenario(mode, args.key_bits, args.trials, seed, args.attacker_idid,
                         args.victim_idid, args.wait)
    if args.kind == "occupancy":
        sizes = [int(x) for x in args.sizes.split(",")]
        rep = occupancy_probe(s, sizes)
        rows = rep.rows()
        for r in rows:
            r["rank_correlation"] = round(rep.rank_correlation, 6)
        emit(rows, args.format, out)
        return 0
    rep = (prime_probe if args.kind == "prime-probe" else flush_reload)(s)
    if args.per_bit:
        emit(rep.rows(), args.format, out, ("bit", "true", "recovered", "votes0", "votes1"))
        return 0
    row = rep.summary()
    if rep.key_bits:
        lo, hi = binomial_ci(rep.correct, len(rep.key_bits), 0.99)
        row["ci99_low"], row["ci99_high"] = round(lo, 6), round(hi, 6)
    emit([row], args.format, out)
    return 0


def cmd_evict_stats(args, out) -> int:
    if args.entries < 1 or args.trials < 1:
        raise UsageError("--entries and --trials must be >= 1")
    samples = evict_subcache_experiment(args.entries, args.trials, _seed(args),
                                        via_cache=args.via_cache, parallel=args.parallel_trials)
    cs = coupon_stats(args.entries)
    var = float(samples.var(ddof=1)) if samples.size > 1 else 0.0
    emit([{
        "entries": args.entries, "trials": args.trials,
        "sample_mean": round(float(samples.mean()), 4), "sample_variance": round(var, 4),
        "expected": round(cs.expected, 4), "variance_asymptotic": round(cs.variance, 4),
        "variance_exact": round(cs.exact_variance, 4),
        "min": int(samples.min()), "max": int(samples.max()),
    }], args.format, out)
    return 0


def cmd_compare(args, out) -> int:
    cfg = load_hierarchy_config(args.config, _seed(args))
    if args.trace:
        dmap, records = read_trace(args.trace, cfg.levels[0].addr_bits)
    else:
        mixes = bundled_mixes()
        if args.mix not in mixes:
            raise UsageError(f"unknown mix {args.mix!r}; choose from {', '.join(mixes)}")
        dmap, records = mixes[args.mix]
    base, hyb = compare_runs(lambda: Hierarchy(cfg), dmap, records, args.warmup)
    rows = []
    for d in sorted(set(base.domains()) | set(hyb.domains())):
        for k, name in enumerate(cfg.levels):
            b, h = base.cell(k, d), hyb.cell(k, d)
            ab, ah = base.amat(k, d), hyb.amat(k, d)
            rows.append({
                "level": name.level_name, "idid": d,
                "baseline_misses": b.misses, "hybcache_misses": h.misses,
                "baseline_miss_rate": round(b.miss_rate, 6), "hybcache_miss_rate": round(h.miss_rate, 6),
                "baseline_amat": round(ab, 4), "hybcache_amat": round(ah, 4),
                "amat_delta": round(ah - ab, 4),
            })
    emit(rows, args.format, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybsim", description="HybCache hierarchy simulator")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                        help=f"RNG seed (default: $HYBSIM_SEED or {DEFAULT_SEED})")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", "-o", default="-", help="output path, '-' for stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="replay a trace and report stats")
    s.add_argument("--trace", required=True)
    s.add_argument("--config")
    s.add_argument("--baseline", action="store_true", help="run every request as idid 0")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("attack", parents=[common], help="run a side-channel experiment")
    a.add_argument("kind", choices=("prime-probe", "flush-reload", "occupancy"))
    a.add_argument("--mode", choices=[m.value for m in Mode], default="hybcache")
    a.add_argument("--key-bits", type=int, default=64)
    a.add_argument("--trials", type=int, default=20)
    a.add_argument("--attacker-idid", type=int, default=None)
    a.add_argument("--victim-idid", type=int, default=1)
    a.add_argument("--wait", choices=("victim", "idle"), default="victim")
    a.add_argument("--sizes", default="0,16,32,64,128,256,512",
                   help="victim working-set sizes for occupancy")
    a.add_argument("--per-bit", action="store_true")
    a.set_defaults(func=cmd_attack)

    e = sub.add_parser("evict-stats", parents=[common], help="coupon-collector eviction experiment")
    e.add_argument("--entries", type=int, default=128)
    e.add_argument("--trials", type=int, default=10000)
    e.add_argument("--parallel-trials", type=int, default=1)
    e.add_argument("--via-cache", action="store_true")
    e.set_defaults(func=cmd_evict_stats)

    c = sub.add_parser("compare", parents=[common], help="baseline vs HybCache per domain")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace")
    src.add_argument("--mix")
    c.add_argument("--config")
    c.add_argument("--warmup", type=float, default=0.0)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "attacker_idid", 0) is None:
        # occupancy defaults to an isolated attacker, the other attacks to a non-isolated one
        args.attacker_idid = 2 if args.kind == "occupancy" else 0
    buf = io.StringIO()
    try:
        status = args.func(args, buf)
    except UsageError as exc:
        parser.error(str(exc))
    except (TraceParseError, ConfigError, configparser.Error, OSError, ValueError) as exc:
        print(f"hybsim: error: {exc}", file=sys.stderr)
        return 1
    if args.output == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    return status


if __name__ == "__main__":
    sys.exit(main())
