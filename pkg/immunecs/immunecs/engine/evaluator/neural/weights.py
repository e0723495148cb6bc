# -*- coding: utf-8 -*-
"""
Per-individual weight stores and weight inheritance between architectures.

A store maps a group (``"stem"``, a 1-based node position or ``"head"``) to
named tensors. On disk it is a directory of flat binary tensors plus a JSON
manifest giving each tensor's group, name, dtype, shape and file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Union

import numpy as np

from ...exceptions import ConfigurationError
from ...genome import DiscreteArchitecture, LayerSpec, encode_string
from .network import HEAD, STEM, infer_channels

Group = Union[str, int]

MANIFEST = "manifest.json"


@dataclass
class WeightStore:
    architecture: DiscreteArchitecture
    groups: Dict[Group, Dict[str, np.ndarray]]
    fresh: FrozenSet[Group] = field(default_factory=frozenset)

    @property
    def base_width(self):
        return self.groups[STEM]["conv.weight"].shape[0]

    def node(self, position):
        return self.groups.get(position, {})

    def inherited_positions(self):
        return sorted(g for g in self.groups if isinstance(g, int))

    def copy(self):
        return WeightStore(
            architecture=self.architecture,
            groups={g: {k: v.copy() for k, v in t.items()} for g, t in self.groups.items()},
            fresh=self.fresh,
        )

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)

        tensors = []
        for group, named in self.groups.items():
            for name, value in sorted(named.items()):
                filename = f"{group}__{name}.bin"
                np.ascontiguousarray(value).tofile(directory / filename)
                tensors.append({
                    "group": group,
                    "name": name,
                    "dtype": value.dtype.str,
                    "shape": list(value.shape),
                    "file": filename,
                })

        manifest = {
            "encoding": encode_string(self.architecture),
            "layers": [_layer_to_dict(layer) for layer in self.architecture.layers],
            "tensors": tensors,
        }
        (directory / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True))

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        manifest_path = directory / MANIFEST
        if not manifest_path.exists():
            raise ConfigurationError(f"No weight manifest in {directory}")

        manifest = json.loads(manifest_path.read_text())
        architecture = DiscreteArchitecture(layers=tuple(_layer_from_dict(d) for d in manifest["layers"]))

        groups: Dict[Group, Dict[str, np.ndarray]] = {}
        for entry in manifest["tensors"]:
            group = entry["group"]
            value = np.fromfile(directory / entry["file"], dtype=np.dtype(entry["dtype"]))
            expected = int(np.prod(entry["shape"]))
            if value.size != expected:
                raise ConfigurationError(
                    f"Tensor {entry['file']} holds {value.size} values, manifest says {expected}"
                )
            groups.setdefault(group, {})[entry["name"]] = value.reshape(entry["shape"])

        return cls(architecture=architecture, groups=groups)


def _layer_to_dict(layer):
    return {
        "operation": layer.operation,
        "hyperparams": list(layer.hyperparams),
        "inputs": list(layer.inputs),
        "aggregation": layer.aggregation,
    }


def _layer_from_dict(data):
    return LayerSpec(
        operation=data["operation"],
        hyperparams=tuple(data["hyperparams"]),
        inputs=tuple(data["inputs"]),
        aggregation=data.get("aggregation"),
    )


def inherit_weights(parent_weights: WeightStore, parent_arch, child_arch) -> WeightStore:
    """
    Partial store for ``child_arch``: a node is copied from the parent when its
    discrete layer and its input channel count are unchanged, every other node
    is listed in ``fresh``. The stem is always inherited, the head only when
    the final channel count is unchanged.
    """
    base_width = parent_weights.base_width
    parent_channels = infer_channels(parent_arch, base_width)
    child_channels = infer_channels(child_arch, base_width)

    groups = {STEM: {k: v.copy() for k, v in parent_weights.groups[STEM].items()}}
    fresh = set()

    for position, layer in enumerate(child_arch.layers, start=1):
        same = (
            position <= parent_arch.depth
            and parent_arch.layers[position - 1] == layer
            and parent_channels[position] == child_channels[position]
        )
        if same:
            groups[position] = {k: v.copy() for k, v in parent_weights.node(position).items()}
        else:
            fresh.add(position)

    if parent_channels["out"] == child_channels["out"] and HEAD in parent_weights.groups:
        groups[HEAD] = {k: v.copy() for k, v in parent_weights.groups[HEAD].items()}
    else:
        fresh.add(HEAD)

    return WeightStore(architecture=child_arch, groups=groups, fresh=frozenset(fresh))
