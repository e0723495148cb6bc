# -*- coding: utf-8 -*-
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import List

import numpy as np

from ..exceptions import ArgumentError
from .artifacts import SUMMARY, load_json, run_directories
from .stats import permutation_test


@dataclass(frozen=True)
class ComparisonReport:
    metric: str
    alternative: str
    runs_a: List[str]
    runs_b: List[str]
    values_a: List[float]
    values_b: List[float]
    mean_a: float
    mean_b: float
    p_value: float
    exact: bool

    def to_dict(self):
        return asdict(self)


def _metric_values(directory, metric):
    runs = run_directories(directory)
    values = []
    for run in runs:
        summary = load_json(run / SUMMARY)
        if metric not in summary:
            raise ArgumentError(f"Run {run} does not report metric {metric!r}")
        values.append(float(summary[metric]))
    return [str(r) for r in runs], values


def compare_runs(dir_a, dir_b, metric="final_mean_affinity", alternative="greater") -> ComparisonReport:
    """Permutation test of run-level ``metric`` between two result directories (A against B)"""
    runs_a, values_a = _metric_values(dir_a, metric)
    runs_b, values_b = _metric_values(dir_b, metric)
    if len(values_a) < 2 or len(values_b) < 2:
        raise ArgumentError(
            f"Need at least two runs per side, found {len(values_a)} in {dir_a} and {len(values_b)} in {dir_b}"
        )

    result = permutation_test(values_a, values_b, alternative)
    return ComparisonReport(
        metric=metric,
        alternative=alternative,
        runs_a=runs_a,
        runs_b=runs_b,
        values_a=values_a,
        values_b=values_b,
        mean_a=float(np.mean(values_a)),
        mean_b=float(np.mean(values_b)),
        p_value=result.p_value,
        exact=result.exact,
    )
