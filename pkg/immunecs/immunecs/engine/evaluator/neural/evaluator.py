# -*- coding: utf-8 -*-
from __future__ import annotations

from typing import Optional

from ...exceptions import EvaluationError
from ...genome import discretize_genome
from ..base import Evaluator
from .data import Dataset, make_split
from .network import NetworkConfig, check_decodable
from .trainer import TrainConfig, build_for, partial_evaluate


class NeuralEvaluator(Evaluator):
    """Affinity is the best validation accuracy under partial training"""

    name = "neural"
    supports_weights = True

    def __init__(self, dataset: Dataset, train_cfg: Optional[TrainConfig] = None,
                 network_cfg: Optional[NetworkConfig] = None, seed=0):
        super().__init__()
        self.dataset = dataset
        self.train_cfg = train_cfg or TrainConfig()
        self.network_cfg = network_cfg or NetworkConfig()
        self.seed = seed
        self.generation = 0
        self.split = None
        self.prepare_generation(0)

    def compatible_with(self, space):
        return space.decodable

    def prepare_generation(self, generation):
        """Draw a fresh training subset and validation split for this generation"""
        self.generation = generation
        self.split = make_split(
            self.dataset,
            seed=[self.seed, generation],
            subset_fraction=self.train_cfg.subset_fraction,
            validation_fraction=self.train_cfg.validation_fraction,
        )

    def evaluate(self, genome, inherited=None, data_seed=0):
        if not genome.space.decodable:
            raise EvaluationError(f"Search space {genome.space.name} cannot be decoded into a network")
        check_decodable(discretize_genome(genome))

        return partial_evaluate(
            genome, inherited, self.split, self.dataset.n_classes, self.train_cfg,
            network_cfg=self.network_cfg, seed=self.seed, data_seed=data_seed,
        )

    def predict_proba(self, genome, weights, images):
        """Class probabilities of a trained individual"""
        network = build_for(discretize_genome(genome), self.dataset.input_shape, self.dataset.n_classes,
                            self.network_cfg, self.seed, weights)
        return network.predict_proba(images)
