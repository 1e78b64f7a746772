"""Coupon-collector statistics, chi-square tests and binomial intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import spearmanr

ALPHAS = (0.05, 0.01, 0.001)

# Upper-tail chi-square critical values, keyed by degrees of freedom, for
# alpha = 0.05, 0.01, 0.001.
CHI2_CRITICAL = {
    1: (3.8415, 6.6349, 10.8276),
    2: (5.9915, 9.2103, 13.8155),
    3: (7.8147, 11.3449, 16.2662),
    4: (9.4877, 13.2767, 18.4668),
    5: (11.0705, 15.0863, 20.5150),
    6: (12.5916, 16.8119, 22.4577),
    7: (14.0671, 18.4753, 24.3219),
    8: (15.5073, 20.0902, 26.1245),
    9: (16.9190, 21.6660, 27.8772),
    10: (18.3070, 23.2093, 29.5883),
    11: (19.6751, 24.7250, 31.2641),
    12: (21.0261, 26.2170, 32.9095),
    13: (22.3620, 27.6882, 34.5282),
    14: (23.6848, 29.1412, 36.1233),
    15: (24.9958, 30.5779, 37.6973),
    16: (26.2962, 31.9999, 39.2524),
    17: (27.5871, 33.4087, 40.7902),
    18: (28.8693, 34.8053, 42.3124),
    19: (30.1435, 36.1909, 43.8202),
    20: (31.4104, 37.5662, 45.3147),
    21: (32.6706, 38.9322, 46.7970),
    22: (33.9244, 40.2894, 48.2679),
    23: (35.1725, 41.6384, 49.7282),
    24: (36.4150, 42.9798, 51.1786),
    25: (37.6525, 44.3141, 52.6197),
    26: (38.8851, 45.6417, 54.0520),
    27: (40.1133, 46.9629, 55.4760),
    28: (41.3371, 48.2782, 56.8923),
    29: (42.5570, 49.5879, 58.3012),
    30: (43.7730, 50.8922, 59.7031),
    31: (44.9853, 52.1914, 61.0983),
    32: (46.1943, 53.4858, 62.4872),
    33: (47.3999, 54.7755, 63.8701),
    34: (48.6024, 56.0609, 65.2472),
    35: (49.8018, 57.3421, 66.6188),
    36: (50.9985, 58.6192, 67.9852),
    37: (52.1923, 59.8925, 69.3465),
    38: (53.3835, 61.1621, 70.7029),
    39: (54.5722, 62.4281, 72.0547),
    40: (55.7585, 63.6907, 73.4020),
    63: (82.5287, 92.0100, 103.4424),
    127: (154.3015, 166.9874, 181.9930),
    255: (293.2478, 310.4574, 330.5197),
    511: (564.6961, 588.2978, 615.5149),
    1023: (1098.5208, 1131.1587, 1168.4972),
}

_Z = {0.90: 1.6449, 0.95: 1.9600, 0.99: 2.5758, 0.999: 3.2905}


def harmonic(n: int) -> float:
    """n-th harmonic number, summed from the smallest term up."""
    if n < 1:
        raise ValueError("harmonic(n) needs n >= 1")
    return math.fsum(1.0 / k for k in range(n, 0, -1))


@dataclass(frozen=True)
class CouponStats:
    n: int
    expected: float
    variance: float
    exact_variance: float


def coupon_stats(n: int) -> CouponStats:
    """Draws needed to see all ``n`` coupons.

    ``variance`` is the large-n form pi^2 n^2 / 6; ``exact_variance`` is
    n^2 sum(1/k^2) - n H_n for comparison.
    """
    h = harmonic(n)
    h2 = math.fsum(1.0 / (k * k) for k in range(n, 0, -1))
    return CouponStats(n, n * h, math.pi ** 2 / 6 * n * n, n * n * h2 - n * h)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int

    def critical(self, alpha: float) -> float:
        if self.dof not in CHI2_CRITICAL:
            raise KeyError(f"no tabulated critical value for {self.dof} dof")
        return CHI2_CRITICAL[self.dof][ALPHAS.index(alpha)]

    def pass_at(self, alpha: float) -> bool:
        return self.statistic <= self.critical(alpha)


def chi_square_uniform(counts: Sequence[int]) -> ChiSquareResult:
    """Pearson goodness-of-fit against equal bin probabilities."""
    c = np.asarray(counts, dtype=float)
    if c.size < 2:
        raise ValueError("need at least two bins")
    expected = c.sum() / c.size
    if expected < 5:
        raise ValueError(f"expected count per bin {expected:.2f} below 5")
    return ChiSquareResult(float(((c - expected) ** 2).sum() / expected), c.size - 1)


def chi_square_homogeneity(a: Sequence[int], b: Sequence[int]) -> ChiSquareResult:
    """Pearson test that two histograms over the same bins share one distribution."""
    table = np.array([a, b], dtype=float)
    if table.shape[1] < 2:
        raise ValueError("need at least two bins")
    rows = table.sum(axis=1, keepdims=True)
    cols = table.sum(axis=0, keepdims=True)
    expected = rows * cols / table.sum()
    if (expected < 5).any():
        raise ValueError("expected count below 5 in some cell")
    stat = float(((table - expected) ** 2 / expected).sum())
    return ChiSquareResult(stat, table.shape[1] - 1)


def compare_samples(x: Sequence[float], y: Sequence[float], max_bins: int = 10) -> ChiSquareResult:
    """Homogeneity test on two samples binned at pooled quantiles.

    Adjacent bins are merged until every cell expects at least 5 counts.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    pooled = np.concatenate([x, y])
    edges = np.unique(np.quantile(pooled, np.linspace(0, 1, max_bins + 1)[1:-1]))
    hx = np.bincount(np.searchsorted(edges, x, side="right"), minlength=edges.size + 1)
    hy = np.bincount(np.searchsorted(edges, y, side="right"), minlength=edges.size + 1)
    fx, fy = x.size / pooled.size, y.size / pooled.size
    bx, by = [], []
    ax = ay = 0
    for cx, cy in zip(hx, hy):
        ax, ay = ax + cx, ay + cy
        if min(fx, fy) * (ax + ay) >= 5:
            bx.append(ax)
            by.append(ay)
            ax = ay = 0
    if ax or ay:
        if not bx:
            raise ValueError("samples too small to bin")
        bx[-1] += ax
        by[-1] += ay
    if len(bx) < 2:
        # everything landed in one bin: the samples agree trivially
        return ChiSquareResult(0.0, 1)
    return chi_square_homogeneity(bx, by)


def binomial_ci(successes: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    """Normal-approximation interval for a proportion, clamped to [0, 1]."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes outside [0, trials]")
    z = _Z[confidence]
    p = successes / trials
    half = z * math.sqrt(p * (1 - p) / trials)
    return max(0.0, p - half), min(1.0, p + half)


def null_interval(trials: int, p: float = 0.5, confidence: float = 0.99) -> tuple[float, float]:
    """Interval a proportion from ``trials`` fair coin flips falls in."""
    half = _Z[confidence] * math.sqrt(p * (1 - p) / trials)
    return max(0.0, p - half), min(1.0, p + half)


def rank_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman correlation with average ranks for ties."""
    if len(x) < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    return float(spearmanr(x, y).statistic)
