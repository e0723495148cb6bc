# -*- coding: utf-8 -*-
"""
Run configuration: one JSON document with a section per component.

{
    "search": {"preset": "fmnist", "max_generations": 10},
    "train": {"max_epochs": 5},
    "dataset": {"n_classes": 4},
    ...
}

Missing sections take their defaults; unknown sections or keys are errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Tuple

from .committee import CommitteeConfig
from .evaluator.neural.data import DatasetConfig, build_dataset
from .evaluator.neural.evaluator import NeuralEvaluator
from .evaluator.neural.network import NetworkConfig
from .evaluator.neural.trainer import FullTrainConfig, TrainConfig
from .evaluator.surrogate import SurrogateConfig, SurrogateEvaluator, SurrogateLandscape
from .exceptions import ConfigurationError
from .harness.stats import ALTERNATIVES
from .search import SearchConfig

EVALUATORS = ("surrogate", "neural")


@dataclass(frozen=True)
class ExperimentConfig:
    n_parents: int = 100
    n_clones: int = 10
    n_genomes: int = 60
    depths: Tuple[int, ...] = (3, 9)
    alternative: str = "two-sided"
    depth_range: Tuple[int, int] = (3, 12)

    def __post_init__(self):
        object.__setattr__(self, "depths", tuple(self.depths))
        object.__setattr__(self, "depth_range", tuple(self.depth_range))
        self.validate()

    def validate(self):
        if self.n_parents < 3 or self.n_genomes < 3:
            raise ConfigurationError("Experiments need at least 3 genomes per group")
        if self.n_clones < 1:
            raise ConfigurationError("n_clones must be at least 1")
        if not self.depths or min(self.depths) < 1:
            raise ConfigurationError("depths must be a non-empty list of positive integers")
        if self.alternative not in ALTERNATIVES:
            raise ConfigurationError(f"alternative must be one of {ALTERNATIVES}")
        if len(self.depth_range) != 2 or not 1 <= self.depth_range[0] <= self.depth_range[1]:
            raise ConfigurationError("depth_range must be [d_min, d_max] with 1 <= d_min <= d_max")

    def to_dict(self):
        return {
            "n_parents": self.n_parents,
            "n_clones": self.n_clones,
            "n_genomes": self.n_genomes,
            "depths": list(self.depths),
            "alternative": self.alternative,
            "depth_range": list(self.depth_range),
        }

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"Unknown experiment settings: {sorted(unknown)}")
        return cls(**data)


SECTIONS = {
    "search": SearchConfig,
    "train": TrainConfig,
    "full_train": FullTrainConfig,
    "surrogate": SurrogateConfig,
    "dataset": DatasetConfig,
    "network": NetworkConfig,
    "committee": CommitteeConfig,
    "experiments": ExperimentConfig,
}


@dataclass(frozen=True)
class RunConfig:
    search: SearchConfig = field(default_factory=SearchConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    full_train: FullTrainConfig = field(default_factory=FullTrainConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    committee: CommitteeConfig = field(default_factory=CommitteeConfig)
    experiments: ExperimentConfig = field(default_factory=ExperimentConfig)

    def to_dict(self):
        return {name: getattr(self, name).to_dict() for name in SECTIONS}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigurationError("A run configuration must be a JSON object")
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ConfigurationError(f"Unknown configuration sections: {sorted(unknown)}")

        sections = {}
        for name, section_cls in SECTIONS.items():
            section = data.get(name, {})
            if not isinstance(section, dict):
                raise ConfigurationError(f"Section {name!r} must be a JSON object")
            try:
                sections[name] = section_cls.from_dict(section)
            except TypeError as e:
                raise ConfigurationError(f"Invalid {name} settings: {str(e)}")
        return cls(**sections)

    def with_seed(self, seed):
        """Search seed only; the surrogate landscape and the dataset keep their own seeds"""
        return replace(self, search=replace(self.search, seed=seed))


def load_run_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()

    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Configuration file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except ValueError as e:
        raise ConfigurationError(f"Configuration file {path} is not valid JSON: {str(e)}")
    return RunConfig.from_dict(data)


def build_evaluator(name, space, cfg: RunConfig, seed=0):
    """Evaluator named ``name`` for ``space``, built from the run configuration"""
    if name == "surrogate":
        return SurrogateEvaluator(SurrogateLandscape(space, cfg.surrogate))
    if name == "neural":
        if not space.decodable:
            raise ConfigurationError(f"Search space {space.name} cannot be trained by the neural evaluator")
        return NeuralEvaluator(build_dataset(cfg.dataset), cfg.train, cfg.network, seed=seed)
    raise ConfigurationError(f"Unknown evaluator {name!r}; expected one of {EVALUATORS}")
