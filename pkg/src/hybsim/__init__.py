"""Trace-driven simulator for HybCache, a hybrid soft-partitioned cache,
with a conventional LRU baseline and a side-channel attack lab."""

from .analysis import binomial_ci, chi_square_uniform, coupon_stats, harmonic
from .attacks import (AttackScenario, DetectionReport, Mode, evict_subcache_experiment,
                      flush_reload, occupancy_probe, prime_probe)
from .cache import AccessKind, AccessOutcome, AccessRequest, HybridCache, Verdict
from .geometry import CacheConfig, decompose, subcache_slot, validate_config
from .hierarchy import MEMORY, Hierarchy, HierarchyConfig, build_hierarchy
from .replacement import LruState, SeededRng
from .workload import DomainMap, TraceRecord, VictimSpec, parse_trace, replay

__version__ = "0.1.0"
