"""Cache geometry: address slicing and subcache slot enumeration."""
from __future__ import annotations

from dataclasses import dataclass


class ConfigError(ValueError):
    """Raised when a cache configuration violates a geometry invariant."""


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class CacheConfig:
    level_name: str = "L1"
    line_size_bytes: int = 64
    num_sets: int = 128
    num_ways: int = 8
    iso_ways: int = 2
    hit_latency_cycles: int = 4
    addr_bits: int = 46

    @property
    def offset_bits(self) -> int:
        return self.line_size_bytes.bit_length() - 1

    @property
    def index_bits(self) -> int:
        return self.num_sets.bit_length() - 1

    @property
    def n_isolated(self) -> int:
        """Number of subcache entries (isolated ways times sets)."""
        return self.iso_ways * self.num_sets

    @property
    def first_iso_way(self) -> int:
        return self.num_ways - self.iso_ways

    @property
    def size_bytes(self) -> int:
        return self.line_size_bytes * self.num_sets * self.num_ways


@dataclass(frozen=True)
class DecomposedAddress:
    offset: int
    set_index: int
    set_tag: int
    extended_tag: int


def validate_config(cfg: CacheConfig) -> CacheConfig:
    """Return ``cfg`` unchanged, or raise ConfigError naming every violation."""
    problems = []
    if not _is_pow2(cfg.line_size_bytes):
        problems.append("line size not a power of two")
    if not _is_pow2(cfg.num_sets):
        problems.append("sets not a power of two")
    if cfg.num_ways < 1:
        problems.append("ways below minimum")
    if cfg.iso_ways < 1:
        problems.append("iso_ways below minimum")
    if cfg.iso_ways > cfg.num_ways:
        problems.append("iso_ways exceeds ways")
    if cfg.hit_latency_cycles < 0:
        problems.append("negative hit latency")
    if not problems and cfg.addr_bits <= cfg.offset_bits + cfg.index_bits:
        problems.append("tag field empty")
    if problems:
        raise ConfigError(f"{cfg.level_name}: " + "; ".join(problems))
    return cfg


def decompose(addr: int, cfg: CacheConfig) -> DecomposedAddress:
    if not 0 <= addr < (1 << cfg.addr_bits):
        raise ValueError(f"address {addr:#x} outside {cfg.addr_bits}-bit space")
    line = addr >> cfg.offset_bits
    return DecomposedAddress(
        offset=addr & (cfg.line_size_bytes - 1),
        set_index=line & (cfg.num_sets - 1),
        set_tag=line >> cfg.index_bits,
        extended_tag=line,
    )


def recompose(parts: DecomposedAddress, cfg: CacheConfig) -> int:
    return (((parts.set_tag << cfg.index_bits) | parts.set_index) << cfg.offset_bits) | parts.offset


def line_address(addr: int, cfg: CacheConfig) -> int:
    """Extended tag of ``addr`` (address with the offset bits dropped)."""
    return addr >> cfg.offset_bits


def subcache_slot(entry_index: int, cfg: CacheConfig) -> tuple[int, int]:
    """Map a flat subcache entry index to its (set, way) slot.

    Subcache ways are the top ``iso_ways`` way indices of every set; entries
    are numbered set-major.
    """
    if not 0 <= entry_index < cfg.n_isolated:
        raise ValueError(f"subcache entry {entry_index} outside [0, {cfg.n_isolated})")
    s, w = divmod(entry_index, cfg.iso_ways)
    return s, cfg.first_iso_way + w


def subcache_entry(set_index: int, way: int, cfg: CacheConfig) -> int:
    """Inverse of :func:`subcache_slot`."""
    if way < cfg.first_iso_way or way >= cfg.num_ways or not 0 <= set_index < cfg.num_sets:
        raise ValueError(f"slot ({set_index}, {way}) is not a subcache slot")
    return set_index * cfg.iso_ways + (way - cfg.first_iso_way)


# Table 3 geometry with 2 isolated ways per set and placeholder latencies.
L1_DEFAULT = CacheConfig("L1", 64, 128, 8, 2, 4)
L2_DEFAULT = CacheConfig("L2", 64, 512, 8, 2, 12)
L3_DEFAULT = CacheConfig("L3", 64, 4096, 16, 2, 42)
