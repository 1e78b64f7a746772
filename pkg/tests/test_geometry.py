import random

import pytest
from hypothesis import given, strategies as st

from hybsim.geometry import (CacheConfig, ConfigError, L1_DEFAULT, L2_DEFAULT, L3_DEFAULT,
                             decompose, recompose, subcache_entry, subcache_slot, validate_config)

L1 = L1_DEFAULT


def test_decompose_zero():
    d = decompose(0, L1)
    assert (d.offset, d.set_index, d.set_tag, d.extended_tag) == (0, 0, 0, 0)


@pytest.mark.parametrize("addr", [0x20040, 0x1FC0, 0x3FFF_FFFF_FFFF, 0x1234_5678])
def test_decompose_matches_bit_arithmetic(addr):
    d = decompose(addr, L1)
    assert d.offset == addr & 0x3F
    assert d.set_index == (addr >> 6) & 0x7F
    assert d.set_tag == addr >> 13
    assert d.extended_tag == addr >> 6


def test_decompose_examples():
    d = decompose(0x20040, L1)
    assert (d.offset, d.set_index, d.set_tag, d.extended_tag) == (0, 1, 0x10, 0x801)
    d = decompose(0x1FC0, L1)
    assert (d.offset, d.set_index, d.set_tag, d.extended_tag) == (0, 127, 0, 0x7F)


@pytest.mark.parametrize("addr", [-1, 1 << 46])
def test_decompose_range(addr):
    with pytest.raises(ValueError):
        decompose(addr, L1)


@given(st.integers(0, (1 << 46) - 1))
def test_extended_tag_is_tag_and_index(addr):
    d = decompose(addr, L2_DEFAULT)
    assert d.extended_tag == (d.set_tag << L2_DEFAULT.index_bits) | d.set_index
    assert recompose(d, L2_DEFAULT) == addr


def test_round_trip_million():
    rng = random.Random(11)
    for cfg in (L1, L3_DEFAULT):
        for _ in range(500_000):
            a = rng.getrandbits(46)
            assert recompose(decompose(a, cfg), cfg) == a


def test_subcache_slot_examples():
    assert subcache_slot(0, L1) == (0, 6)
    assert subcache_slot(1, L1) == (0, 7)
    assert subcache_slot(255, L1) == (127, 7)
    with pytest.raises(ValueError):
        subcache_slot(256, L1)
    with pytest.raises(ValueError):
        subcache_slot(-1, L1)


@pytest.mark.parametrize("cfg", [L1, L2_DEFAULT, CacheConfig("X", 64, 8, 4, 3, 1)])
def test_subcache_slot_is_bijection(cfg):
    image = [subcache_slot(e, cfg) for e in range(cfg.n_isolated)]
    expected = {(s, w) for s in range(cfg.num_sets)
                for w in range(cfg.num_ways) if w >= cfg.num_ways - cfg.iso_ways}
    assert len(set(image)) == cfg.n_isolated
    assert set(image) == expected
    assert [subcache_entry(s, w, cfg) for s, w in image] == list(range(cfg.n_isolated))


def test_table3_geometries_valid():
    assert validate_config(L1) is L1
    assert L1.size_bytes == 64 * 1024
    assert L2_DEFAULT.size_bytes == 256 * 1024
    assert L3_DEFAULT.size_bytes == 4 * 1024 * 1024
    for cfg in (L2_DEFAULT, L3_DEFAULT):
        validate_config(cfg)


@pytest.mark.parametrize("kwargs, message", [
    (dict(iso_ways=0), "iso_ways below minimum"),
    (dict(num_sets=100), "sets not a power of two"),
    (dict(line_size_bytes=48), "line size not a power of two"),
    (dict(iso_ways=9), "iso_ways exceeds ways"),
    (dict(num_ways=0, iso_ways=0), "ways below minimum"),
    (dict(addr_bits=13), "tag field empty"),
])
def test_validate_rejects(kwargs, message):
    with pytest.raises(ConfigError, match=message):
        validate_config(CacheConfig(**kwargs))


def test_validate_reports_every_violation():
    with pytest.raises(ConfigError) as exc:
        validate_config(CacheConfig(num_sets=100, iso_ways=0))
    assert "sets not a power of two" in str(exc.value)
    assert "iso_ways below minimum" in str(exc.value)
