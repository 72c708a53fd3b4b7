"""Two-sample location and scale tests used by the dispersion study.

All tests are two-sided.  Location: Welch's t and the Wilcoxon-Mann-Whitney
normal approximation with tie correction (and continuity correction).  Scale:
Brown-Forsythe (the median-centered Levene F) and Fligner-Killeen with the
chi-square approximation on normal scores of ranked absolute deviations from
the group median.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .evaluation import average_ranks


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float


def _as_groups(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each group needs at least 2 observations")
    return a, b


def welch_t(a, b) -> TestResult:
    """Welch's unequal-variance t test with Welch-Satterthwaite df."""
    a, b = _as_groups(a, b)
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    se = math.sqrt(va + vb)
    if se == 0.0:
        return TestResult(statistic=0.0, p_value=1.0)
    t = (a.mean() - b.mean()) / se
    df = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    p = 2.0 * special.stdtr(df, -abs(t))
    return TestResult(statistic=float(t), p_value=float(p))


def mann_whitney(a, b) -> TestResult:
    """WMW U test, normal approximation with tie and continuity corrections."""
    a, b = _as_groups(a, b)
    n1, n2 = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = average_ranks(pooled)
    r1 = ranks[:n1].sum()
    u1 = r1 - n1 * (n1 + 1) / 2.0
    mean_u = n1 * n2 / 2.0
    n = n1 + n2
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts).sum())) / (n * (n - 1))
    var_u = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var_u <= 0.0:
        return TestResult(statistic=float(u1), p_value=1.0)
    z = (u1 - mean_u - math.copysign(0.5, u1 - mean_u)) / math.sqrt(var_u)
    if u1 == mean_u:
        z = 0.0
    p = 2.0 * special.ndtr(-abs(z))
    return TestResult(statistic=float(u1), p_value=float(min(p, 1.0)))


def brown_forsythe(a, b) -> TestResult:
    """Median-centered Levene test; F statistic on |x - median| deviations."""
    a, b = _as_groups(a, b)
    za = np.abs(a - np.median(a))
    zb = np.abs(b - np.median(b))
    n1, n2 = a.size, b.size
    n = n1 + n2
    zbar1, zbar2 = za.mean(), zb.mean()
    zbar = (za.sum() + zb.sum()) / n
    between = n1 * (zbar1 - zbar) ** 2 + n2 * (zbar2 - zbar) ** 2
    within = ((za - zbar1) ** 2).sum() + ((zb - zbar2) ** 2).sum()
    if within == 0.0:
        return TestResult(statistic=float("inf") if between > 0 else 0.0,
                          p_value=0.0 if between > 0 else 1.0)
    f = (n - 2) * between / within
    p = special.fdtrc(1.0, float(n - 2), f)
    return TestResult(statistic=float(f), p_value=float(p))


def fligner_killeen(a, b) -> TestResult:
    """Rank-based scale test on normal scores of |x - group median|."""
    a, b = _as_groups(a, b)
    za = np.abs(a - np.median(a))
    zb = np.abs(b - np.median(b))
    pooled = np.concatenate([za, zb])
    n = pooled.size
    ranks = average_ranks(pooled)
    scores = special.ndtri(0.5 + ranks / (2.0 * (n + 1.0)))
    abar = scores.mean()
    var_a = ((scores - abar) ** 2).sum() / (n - 1)
    if var_a == 0.0:
        return TestResult(statistic=0.0, p_value=1.0)
    s1 = scores[: a.size].sum()
    s2 = scores[a.size :].sum()
    stat = ((s1 - a.size * abar) ** 2 / a.size + (s2 - b.size * abar) ** 2 / b.size) / var_a
    p = special.chdtrc(1.0, float(stat))
    return TestResult(statistic=float(stat), p_value=float(p))
