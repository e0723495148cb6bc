# -*- coding: utf-8 -*-
"""
Rank correlation and permutation tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import stats

from ..exceptions import ArgumentError

ALTERNATIVES = ("two-sided", "greater", "less")
EXACT_SPEARMAN_MAX_N = 8
EXACT_PERMUTATION_LIMIT = 200_000
MONTE_CARLO_SAMPLES = 100_000
# float slack when comparing permuted statistics with the observed one
TOLERANCE = 1e-12


@dataclass(frozen=True)
class CorrelationReport:
    spearman_r: Optional[float]
    p_value: Optional[float]
    n: int
    label: str = "overall"
    alternative: str = "two-sided"

    @property
    def defined(self):
        return self.spearman_r is not None

    def to_dict(self):
        data = asdict(self)
        data["defined"] = self.defined
        return data


def _check_alternative(alternative):
    if alternative not in ALTERNATIVES:
        raise ArgumentError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    return float((a * b).sum() / math.sqrt((a * a).sum() * (b * b).sum()))


def _exceeds(values, observed, alternative):
    if alternative == "greater":
        return values >= observed - TOLERANCE
    if alternative == "less":
        return values <= observed + TOLERANCE
    return np.abs(values) >= abs(observed) - TOLERANCE


def spearman(x, y, alternative="two-sided", label="overall") -> CorrelationReport:
    """
    Spearman's r with midranks for ties. The p-value is exact over all
    permutations of y for n <= 8 and from the t distribution with n - 2
    degrees of freedom otherwise.
    """
    _check_alternative(alternative)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ArgumentError("spearman needs two one-dimensional samples of equal length")
    n = len(x)
    if n < 3:
        raise ArgumentError(f"spearman needs at least 3 pairs, got {n}")

    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        return CorrelationReport(spearman_r=None, p_value=None, n=n, label=label, alternative=alternative)

    r = max(-1.0, min(1.0, _pearson(rx, ry)))

    if n <= EXACT_SPEARMAN_MAX_N:
        permuted = np.array([_pearson(rx, ry[list(order)]) for order in itertools.permutations(range(n))])
        p = float(_exceeds(permuted, r, alternative).mean())
    else:
        p = _t_approximation(r, n, alternative)

    return CorrelationReport(spearman_r=r, p_value=min(1.0, p), n=n, label=label, alternative=alternative)


def _t_approximation(r, n, alternative):
    dof = n - 2
    if abs(r) >= 1.0:
        t = math.copysign(math.inf, r)
    else:
        t = r * math.sqrt(dof / (1.0 - r * r))

    if alternative == "greater":
        return float(stats.t.sf(t, dof))
    if alternative == "less":
        return float(stats.t.cdf(t, dof))
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), dof)))


@dataclass(frozen=True)
class PermutationResult:
    statistic: float
    p_value: float
    exact: bool
    permutations: int


def permutation_test(a, b, alternative="greater", rng=None) -> PermutationResult:
    """
    Difference-of-means permutation test of sample ``a`` against sample ``b``.
    Every relabelling is enumerated when that is cheap; otherwise a seeded
    Monte Carlo sample of relabellings is used.
    """
    _check_alternative(alternative)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ArgumentError("permutation_test needs at least two values per sample")

    pooled = np.concatenate([a, b])
    total = len(pooled)
    observed = float(a.mean() - b.mean())

    if math.comb(total, len(a)) <= EXACT_PERMUTATION_LIMIT:
        diffs = []
        for chosen in itertools.combinations(range(total), len(a)):
            mask = np.zeros(total, dtype=bool)
            mask[list(chosen)] = True
            diffs.append(pooled[mask].mean() - pooled[~mask].mean())
        diffs = np.array(diffs)
        exact = True
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        diffs = np.empty(MONTE_CARLO_SAMPLES)
        for index in range(MONTE_CARLO_SAMPLES):
            order = rng.permutation(total)
            diffs[index] = pooled[order[:len(a)]].mean() - pooled[order[len(a):]].mean()
        exact = False

    return PermutationResult(
        statistic=observed,
        p_value=float(_exceeds(diffs, observed, alternative).mean()),
        exact=exact,
        permutations=len(diffs),
    )
