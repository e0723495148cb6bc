# -*- coding: utf-8 -*-
"""
Deterministic multimodal affinity landscape over continuous genes.

Each hidden node is mapped to a feature vector (operation gene, hyperparameter
genes padded to the space's widest operation, plus the connectivity genes in
spaces with skip connections). A node's response is the sum of Gaussian bumps
at its feature vector; the genome's affinity is the mean node response scaled
by a depth response that peaks at ``optimal_depth``. The landscape is smooth in
the genes, so nearby genomes have nearby affinities. Bumps are wide enough
that most of the cube sits on some slope rather than in a flat tail.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError
from .base import Evaluation, Evaluator

PAD_VALUE = 0.5


@dataclass(frozen=True)
class SurrogateConfig:
    seed: int = 0
    n_bumps: int = 6
    min_width: float = 0.3
    max_width: float = 0.45
    min_height: float = 0.2
    max_height: float = 0.45
    optimal_depth: int = 8
    depth_penalty: float = 0.01

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_bumps < 1:
            raise ConfigurationError("n_bumps must be at least 1")
        if not 0 < self.min_width <= self.max_width:
            raise ConfigurationError("Bump widths must satisfy 0 < min_width <= max_width")
        if not 0 < self.min_height <= self.max_height <= 1:
            raise ConfigurationError("Bump heights must satisfy 0 < min_height <= max_height <= 1")
        if self.optimal_depth < 1:
            raise ConfigurationError("optimal_depth must be at least 1")
        if self.depth_penalty < 0:
            raise ConfigurationError("depth_penalty must not be negative")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"Unknown surrogate settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Bump:
    center: Tuple[float, ...]
    width: float
    height: float


class SurrogateLandscape:
    def __init__(self, space, config: Optional[SurrogateConfig] = None,
                 bumps: Optional[Sequence[Bump]] = None):
        self.space = space
        self.config = config or SurrogateConfig()
        self.dimension = 1 + space.max_arity + (2 if space.allows_skip_connections else 0)

        if bumps is None:
            bumps = self._generate_bumps()
        for bump in bumps:
            if len(bump.center) != self.dimension:
                raise ConfigurationError(
                    f"Bump center has {len(bump.center)} coordinates, landscape needs {self.dimension}"
                )

        self.bumps = tuple(bumps)
        self._centers = np.array([b.center for b in self.bumps], dtype=float)
        self._widths = np.array([b.width for b in self.bumps], dtype=float)
        self._heights = np.array([b.height for b in self.bumps], dtype=float)

    def _generate_bumps(self):
        rng = np.random.default_rng(self.config.seed)
        cfg = self.config
        return [
            Bump(
                center=tuple(float(v) for v in rng.random(self.dimension)),
                width=float(rng.uniform(cfg.min_width, cfg.max_width)),
                height=float(rng.uniform(cfg.min_height, cfg.max_height)),
            )
            for _ in range(cfg.n_bumps)
        ]

    def node_features(self, node):
        padded = list(node.hyperparam_genes) + [PAD_VALUE] * (self.space.max_arity - len(node.hyperparam_genes))
        features = [node.operation_gene] + padded
        if self.space.allows_skip_connections:
            features += [node.indegree_gene, node.aggregation_gene]
        return features

    def features(self, genome):
        return np.array([self.node_features(node) for node in genome.nodes], dtype=float)

    def node_responses(self, features):
        sq_dist = ((features[:, None, :] - self._centers[None, :, :]) ** 2).sum(axis=2)
        return (self._heights * np.exp(-sq_dist / (2.0 * self._widths ** 2))).sum(axis=1)

    def depth_response(self, depth):
        return 1.0 / (1.0 + self.config.depth_penalty * (depth - self.config.optimal_depth) ** 2)

    def affinity(self, genome):
        """Mean node response times the depth response, clamped to [0, 1]"""
        responses = self.node_responses(self.features(genome))
        value = float(responses.mean()) * self.depth_response(genome.depth)
        return min(1.0, max(0.0, value))

    @property
    def lipschitz_constant(self):
        """Bound on |f(a) - f(b)| per unit of the largest node-wise feature distance"""
        return float((self._heights / (self._widths * math.sqrt(math.e))).sum())

    def distances(self, genome):
        """Distance from each bump center to the genome's nearest node"""
        features = self.features(genome)
        return np.sqrt(((features[:, None, :] - self._centers[None, :, :]) ** 2).sum(axis=2)).min(axis=0)

    def coverage(self, genomes):
        """Number of bumps whose nearest genome lies within one bump width"""
        if not genomes:
            return 0
        nearest = np.array([self.distances(g) for g in genomes]).min(axis=0)
        return int((nearest <= self._widths).sum())


class SurrogateEvaluator(Evaluator):
    name = "surrogate"
    supports_weights = False

    def __init__(self, landscape: SurrogateLandscape):
        super().__init__()
        self.landscape = landscape

    def compatible_with(self, space):
        return space.name == self.landscape.space.name

    def evaluate(self, genome, inherited=None, data_seed=0):
        return Evaluation(affinity=self.landscape.affinity(genome))
