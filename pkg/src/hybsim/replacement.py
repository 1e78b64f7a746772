"""Replacement state: per-set true LRU and a seeded uniform victim selector."""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # splitmix64 finalizer
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class LruState:
    """Recency order of the ways of every set, most recent first.

    A fresh state orders each set by ascending way index, so way 0 is MRU
    and way ``num_ways - 1`` is the first victim.
    """

    def __init__(self, num_sets: int, num_ways: int):
        self.num_ways = num_ways
        self.order = [list(range(num_ways)) for _ in range(num_sets)]

    def touch(self, set_index: int, way: int) -> None:
        lst = self.order[set_index]
        if lst[0] != way:
            lst.remove(way)
            lst.insert(0, way)

    def demote(self, set_index: int, way: int) -> None:
        """Move ``way`` to the LRU position (used when a line is invalidated)."""
        lst = self.order[set_index]
        if lst[-1] != way:
            lst.remove(way)
            lst.append(way)

    def victim(self, set_index: int) -> int:
        return self.order[set_index][-1]

    def copy(self) -> "LruState":
        new = LruState.__new__(LruState)
        new.num_ways = self.num_ways
        new.order = [list(o) for o in self.order]
        return new


def lru_touch(state: LruState, set_index: int, way: int) -> LruState:
    state.touch(set_index, way)
    return state


def lru_victim(state: LruState, set_index: int) -> int:
    return state.victim(set_index)


class SeededRng:
    """Counter-based 64-bit generator (splitmix64 over a keyed counter).

    ``stream`` selects an independent sequence for the same seed, which is how
    cache levels and Monte-Carlo trials get their own generators.  Not
    cryptographically secure.
    """

    def __init__(self, seed: int = 0, stream: int = 0):
        self.seed = seed & _MASK64
        self.stream = stream & _MASK64
        self._key = _mix64((self.seed ^ _mix64((self.stream + _GOLDEN) & _MASK64)) & _MASK64)
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return _mix64((self._key + self.counter * _GOLDEN) & _MASK64)

    def next_uniform(self, n: int) -> int:
        """Uniform integer in [0, n), n < 2**32 (Lemire multiply-shift with rejection)."""
        if not 1 <= n < (1 << 32):
            raise ValueError("n must be in [1, 2**32)")
        threshold = ((1 << 32) - n) % n
        while True:
            m = (self.next_u64() >> 32) * n
            if (m & 0xFFFFFFFF) >= threshold:
                return m >> 32

    def u64_batch(self, count: int) -> np.ndarray:
        """The next ``count`` outputs of :meth:`next_u64` as a uint64 array."""
        ctr = np.arange(self.counter + 1, self.counter + 1 + count, dtype=np.uint64)
        self.counter += count
        with np.errstate(over="ignore"):
            return _mix64_np(np.uint64(self._key) + ctr * np.uint64(_GOLDEN))

    def uniform_batch(self, n: int, count: int) -> np.ndarray:
        """The next ``count`` values :meth:`next_uniform` would return, vectorised."""
        if not 1 <= n < (1 << 32):
            raise ValueError("n must be in [1, 2**32)")
        threshold = ((1 << 32) - n) % n
        out = np.empty(0, dtype=np.int64)
        while out.size < count:
            start = self.counter
            need = count - out.size
            with np.errstate(over="ignore"):
                m = (self.u64_batch(need) >> np.uint64(32)) * np.uint64(n)
            ok = (m & np.uint64(0xFFFFFFFF)) >= np.uint64(threshold)
            vals = (m[ok] >> np.uint64(32)).astype(np.int64)
            if vals.size > need:
                # keep the counter in step with the scalar path
                last = np.flatnonzero(ok)[need - 1]
                self.counter = start + int(last) + 1
                vals = vals[:need]
            out = np.concatenate([out, vals])
        return out


def random_victim(rng: SeededRng, n_isolated: int) -> int:
    """Subcache entry to replace, uniform over all ``n_isolated`` entries."""
    return rng.next_uniform(n_isolated)
