# -*- coding: utf-8 -*-
"""
Search spaces: the menu of operations a genome can express, their discrete
hyperparameter values and the connectivity rules of the graph.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Tuple

from .exceptions import ConfigurationError

IDENTITY = "Identity"
AGGREGATIONS = ("Add", "Concatenate")

_NAME_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class HyperParameter:
    name: str
    values: Tuple[Any, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not _NAME_PATTERN.match(self.name):
            raise ConfigurationError(f"Invalid hyperparameter name: {self.name!r}")
        if not self.values:
            raise ConfigurationError(f"Hyperparameter {self.name} has no values")


@dataclass(frozen=True)
class OperationSpec:
    name: str
    hyperparams: Tuple[HyperParameter, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "hyperparams", tuple(self.hyperparams))
        if not _NAME_PATTERN.match(self.name):
            raise ConfigurationError(f"Invalid operation name: {self.name!r}")

        names = [hp.name for hp in self.hyperparams]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"Duplicate hyperparameter in operation {self.name}")

    @property
    def arity(self):
        return len(self.hyperparams)

    def hyperparam_names(self):
        return tuple(hp.name for hp in self.hyperparams)


@dataclass(frozen=True)
class SearchSpace:
    name: str
    operations: Tuple[OperationSpec, ...]
    allows_skip_connections: bool = False
    max_indegree: int = 1
    aggregation_choices: Tuple[str, ...] = AGGREGATIONS
    decodable: bool = False
    _index: Dict[str, OperationSpec] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "operations", tuple(self.operations))
        object.__setattr__(self, "aggregation_choices", tuple(self.aggregation_choices))
        self.validate()
        object.__setattr__(self, "_index", {op.name: op for op in self.operations})

    def validate(self):
        """Validate connectivity rules and the operation menu"""
        if not self.operations:
            raise ConfigurationError(f"Search space {self.name} has no operations")

        names = [op.name for op in self.operations]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"Operation names must be unique in search space {self.name}")

        if IDENTITY not in names:
            raise ConfigurationError(f"Search space {self.name} must include the {IDENTITY} operation")

        if self.max_indegree not in (1, 2):
            raise ConfigurationError("max_indegree must be 1 or 2")

        if not self.allows_skip_connections and self.max_indegree != 1:
            raise ConfigurationError("max_indegree must be 1 when skip connections are not allowed")

        if not self.aggregation_choices:
            raise ConfigurationError("aggregation_choices must not be empty")

        for aggregation in self.aggregation_choices:
            if aggregation not in AGGREGATIONS:
                raise ConfigurationError(f"Unknown aggregation: {aggregation}")

    @property
    def operation_names(self):
        return tuple(op.name for op in self.operations)

    @property
    def max_arity(self):
        return max(op.arity for op in self.operations)

    def operation(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise ConfigurationError(f"Operation {name} is not part of search space {self.name}")

    def indegree_choices(self, position):
        """Legal indegrees for the node at 1-based ``position``"""
        if position <= 1 or self.max_indegree == 1:
            return (1,)
        return (1, 2)

    def to_dict(self):
        return {
            "name": self.name,
            "allows_skip_connections": self.allows_skip_connections,
            "max_indegree": self.max_indegree,
            "aggregation_choices": list(self.aggregation_choices),
            "decodable": self.decodable,
            "operations": {
                op.name: {hp.name: list(hp.values) for hp in op.hyperparams}
                for op in self.operations
            },
        }

    @classmethod
    def from_dict(cls, data):
        """Build a space from the JSON layout: operation -> hyperparameter -> values"""
        try:
            operations = [
                OperationSpec(
                    name=op_name,
                    hyperparams=tuple(
                        HyperParameter(hp_name, tuple(values))
                        for hp_name, values in (hyperparams or {}).items()
                    ),
                )
                for op_name, hyperparams in data["operations"].items()
            ]
        except (KeyError, AttributeError, TypeError) as e:
            raise ConfigurationError(f"Malformed search space document: {e}")

        known = {"name", "operations", "allows_skip_connections", "max_indegree",
                 "aggregation_choices", "decodable"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown search space keys: {sorted(unknown)}")

        return cls(
            name=data.get("name", "custom"),
            operations=tuple(operations),
            allows_skip_connections=bool(data.get("allows_skip_connections", False)),
            max_indegree=int(data.get("max_indegree", 1)),
            aggregation_choices=tuple(data.get("aggregation_choices", AGGREGATIONS)),
            decodable=bool(data.get("decodable", False)),
        )


YES_NO = (True, False)

PRESETS = {
    "fmnist-seq": {
        "name": "fmnist-seq",
        "allows_skip_connections": False,
        "max_indegree": 1,
        "decodable": True,
        "operations": {
            "Conv": {"kernel_size": [1, 3, 5, 7], "batchnorm": list(YES_NO), "relu": list(YES_NO)},
            "DSepConv": {"kernel_size": [1, 3, 5, 7], "batchnorm": list(YES_NO), "relu": list(YES_NO)},
            "Pool": {"pool_type": ["Max", "Avg"], "kernel_size": [3, 5],
                     "channel_multiplier": [1.0, 4.0 / 3.0, 5.0 / 3.0, 2.0]},
            "Identity": {},
        },
    },
    "cifar-blocks": {
        "name": "cifar-blocks",
        "allows_skip_connections": True,
        "max_indegree": 2,
        "decodable": False,
        "operations": {
            "ResNetBlock": {"kernel_size": [3, 5], "downsample": list(YES_NO)},
            "ResNetBottleneckBlock": {"kernel_size": [3, 5], "downsample": list(YES_NO)},
            "DenseNetBlock": {"growth_factor": [12, 24, 36], "transition": list(YES_NO)},
            "DenseNetBottleneckBlock": {"growth_factor": [12, 24, 36], "transition": list(YES_NO)},
            "InceptionResNetA": {"kernel_size": [3, 5], "bottleneck_factor": [0.1, 0.4, 0.75]},
            "InceptionResNetB": {"kernel_size": [3, 5], "bottleneck_factor": [0.1, 0.4, 0.75]},
            "Pool": {"pool_type": ["Max", "Avg"], "kernel_size": [3, 5]},
            "Identity": {},
        },
    },
}


def preset_names():
    return tuple(PRESETS)


def load_space(ref):
    """Load a search space from a preset name or a JSON file path"""
    if isinstance(ref, SearchSpace):
        return ref

    if ref in PRESETS:
        return SearchSpace.from_dict(PRESETS[ref])

    path = Path(ref)
    if not path.exists():
        raise ConfigurationError(
            f"Unknown search space {ref!r}; expected one of {sorted(PRESETS)} or a JSON file"
        )

    try:
        data = json.loads(path.read_text())
    except ValueError as e:
        raise ConfigurationError(f"Search space file {path} is not valid JSON: {e}")

    return SearchSpace.from_dict(data)


def render_value(value):
    """Canonical text form of a discrete hyperparameter value"""
    if isinstance(value, bool):
        return "yes" if value else "no"
    return str(value)


def iter_value_lists(space: SearchSpace) -> Iterable[Tuple[str, str, Tuple[Any, ...]]]:
    for op in space.operations:
        for hp in op.hyperparams:
            yield op.name, hp.name, hp.values
