# -*- coding: utf-8 -*-
"""
Evaluation contract shared by the surrogate and the neural trainer.
"""

from __future__ import annotations

import math
import threading
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence

from ..genome import encode_string
from ..log import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class Evaluation:
    affinity: float
    weights: Optional[Any] = None
    epochs: int = 0
    failed: bool = False
    error: Optional[str] = None


@dataclass(frozen=True)
class EvaluationJob:
    genome: Any
    inherited: Optional[Any] = None
    data_seed: int = 0


class Evaluator(ABC):
    """Affinity oracle; ``evaluate`` must be deterministic given (genome, inherited, data_seed)"""

    name = "evaluator"
    supports_weights = False

    def __init__(self):
        self.calls = 0
        self._lock = threading.Lock()

    def compatible_with(self, space):
        return True

    def prepare_generation(self, generation):
        """Refresh per-generation state such as the training/validation split"""

    @abstractmethod
    def evaluate(self, genome, inherited=None, data_seed=0) -> Evaluation:
        raise NotImplementedError

    def _count(self):
        with self._lock:
            self.calls += 1


def _run_job(evaluator, job):
    evaluator._count()
    try:
        result = evaluator.evaluate(job.genome, inherited=job.inherited, data_seed=job.data_seed)
    except Exception as e:
        error_msg = f"Evaluation failed for {encode_string(job.genome)}: {str(e)}"
        logger.error(error_msg)
        return Evaluation(affinity=0.0, failed=True, error=str(e))

    if not math.isfinite(result.affinity):
        logger.error(f"Evaluation returned a non-finite affinity for {encode_string(job.genome)}")
        return Evaluation(affinity=0.0, failed=True, error="non-finite affinity")

    affinity = min(1.0, max(0.0, float(result.affinity)))

    return result if affinity == result.affinity else Evaluation(
        affinity=affinity, weights=result.weights, epochs=result.epochs)


def evaluate_all(evaluator, jobs: Sequence[EvaluationJob], workers=1) -> List[Evaluation]:
    """Evaluate jobs, concurrently when ``workers > 1``; results follow job order"""
    if not jobs:
        return []

    if workers <= 1 or len(jobs) == 1:
        return [_run_job(evaluator, job) for job in jobs]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _run_job(evaluator, job), jobs))
