"""Kolmogorov-Smirnov statistics with asymptotic p-values."""

from __future__ import annotations

import math

import numpy as np
from scipy import special

__all__ = ["norm_cdf", "cauchy_cdf", "ks_1samp", "ks_2samp", "binomial_se"]


def norm_cdf(x):
    return special.ndtr(x)


def cauchy_cdf(x):
    return 0.5 + np.arctan(x) / math.pi


_CDFS = {"norm": norm_cdf, "cauchy": cauchy_cdf}


def _kolmogorov_p(n_eff: float, stat: float) -> float:
    return float(min(1.0, max(0.0, special.kolmogorov(math.sqrt(n_eff) * stat))))


def ks_1samp(sample, cdf="norm") -> tuple[float, float]:
    """sup |F_n - F| and its asymptotic p-value; ``cdf`` is a name or a callable."""
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    F = _CDFS[cdf] if isinstance(cdf, str) else cdf
    u = np.asarray(F(x), dtype=float)
    i = np.arange(1, n + 1)
    stat = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    return stat, _kolmogorov_p(n, stat)


def ks_2samp(a, b) -> tuple[float, float]:
    """Two-sample statistic with the asymptotic p-value at effective size mn/(m+n)."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    m, n = a.size, b.size
    if m == 0 or n == 0:
        raise ValueError("empty sample")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / m
    fb = np.searchsorted(b, pooled, side="right") / n
    stat = float(np.max(np.abs(fa - fb)))
    return stat, _kolmogorov_p(m * n / (m + n), stat)


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)
