# -*- coding: utf-8 -*-
"""
Minimal numpy trainer for the decodable sequential search space.
"""

from .data import (
    DataSplit,
    Dataset,
    DatasetConfig,
    build_dataset,
    load_dataset,
    make_procedural_dataset,
    make_split,
    pad_and_crop,
    save_dataset,
)
from .evaluator import NeuralEvaluator
from .network import NetworkConfig, decode_and_build, infer_channels, infer_shapes
from .trainer import FullTrainConfig, FullTrainResult, TrainConfig, full_train, partial_evaluate
from .weights import WeightStore, inherit_weights
