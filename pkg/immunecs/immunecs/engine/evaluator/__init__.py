# -*- coding: utf-8 -*-
from .base import Evaluation, EvaluationJob, Evaluator, evaluate_all
from .surrogate import SurrogateConfig, SurrogateEvaluator, SurrogateLandscape

__all__ = [
    "Evaluation",
    "EvaluationJob",
    "Evaluator",
    "evaluate_all",
    "SurrogateConfig",
    "SurrogateEvaluator",
    "SurrogateLandscape",
]
