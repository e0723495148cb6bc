# -*- coding: utf-8 -*-
"""Genome builders and stub evaluators shared by the engine tests."""

import numpy as np

from immunecs.immunecs.engine.evaluator.base import Evaluation, Evaluator
from immunecs.immunecs.engine.evaluator.neural import DatasetConfig, NetworkConfig, TrainConfig
from immunecs.immunecs.engine.genome import ArchitectureGenome, NodeGene
from immunecs.immunecs.engine.space import load_space

FMNIST = load_space("fmnist-seq")
CIFAR = load_space("cifar-blocks")

# fmnist-seq operation bins: Conv [0, .25), DSepConv [.25, .5), Pool [.5, .75), Identity [.75, 1]
CONV_GENE = 0.1
DSEP_GENE = 0.3
POOL_GENE = 0.6
IDENTITY_GENE = 0.9


def conv(kernel=0.3, batchnorm=0.1, relu=0.1):
    """Conv 3x3 with batchnorm and relu by default"""
    return NodeGene(0.0, 0.0, 0.0, CONV_GENE, (kernel, batchnorm, relu))


def dsep(kernel=0.3, batchnorm=0.1, relu=0.1):
    return NodeGene(0.0, 0.0, 0.0, DSEP_GENE, (kernel, batchnorm, relu))


def pool(kind=0.1, kernel=0.1, multiplier=0.1):
    """Max pool 3x3, channel multiplier 1 by default; multiplier=0.9 doubles the channels"""
    return NodeGene(0.0, 0.0, 0.0, POOL_GENE, (kind, kernel, multiplier))


def identity():
    return NodeGene(0.0, 0.0, 0.0, IDENTITY_GENE, ())


def genome(*nodes, space=FMNIST):
    return ArchitectureGenome(nodes=tuple(nodes), space=space)


def tiny_dataset_config(**overrides):
    settings = dict(n_classes=3, image_size=8, train_size=90, test_size=30, noise=0.1, seed=5)
    settings.update(overrides)
    return DatasetConfig(**settings)


def tiny_train_config(**overrides):
    settings = dict(subset_fraction=0.5, validation_fraction=0.3, max_epochs=2, batch_size=16,
                    learning_rate=0.01, early_stop_patience=2)
    settings.update(overrides)
    return TrainConfig(**settings)


def tiny_network_config(**overrides):
    settings = dict(base_width=4, dropout=0.0)
    settings.update(overrides)
    return NetworkConfig(**settings)


class ConstantEvaluator(Evaluator):
    name = "constant"

    def __init__(self, value=0.5):
        super().__init__()
        self.value = value

    def evaluate(self, genome, inherited=None, data_seed=0):
        return Evaluation(affinity=self.value)


class DepthEvaluator(Evaluator):
    """Affinity grows with depth and saturates, so results are easy to predict"""

    name = "depth"

    def evaluate(self, genome, inherited=None, data_seed=0):
        return Evaluation(affinity=1.0 - 1.0 / (1.0 + genome.depth))


class FailingEvaluator(Evaluator):
    name = "failing"

    def evaluate(self, genome, inherited=None, data_seed=0):
        raise RuntimeError("trainer crashed")


def rng(seed=0):
    return np.random.default_rng(seed)
