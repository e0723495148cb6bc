# -*- coding: utf-8 -*-
"""
Decode a sequential architecture into a trainable network.

stem (pointwise conv to ``base_width``) -> hidden blocks -> head (global
average+max concatenation, batchnorm, dropout, dense). Only pooling layers
change the channel count.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, Tuple

import numpy as np

from ...exceptions import ConfigurationError, EvaluationError
from ...space import IDENTITY
from .layers import (
    BatchNorm,
    Conv2d,
    Dense,
    DepthwiseConv2d,
    Dropout,
    GlobalConcatPool,
    Pool2d,
    ReLU,
    softmax,
)

STEM = "stem"
HEAD = "head"


@dataclass(frozen=True)
class NetworkConfig:
    base_width: int = 16
    dropout: float = 0.2
    dtype: str = "float32"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.base_width < 1:
            raise ConfigurationError("base_width must be at least 1")
        if not 0 <= self.dropout < 1:
            raise ConfigurationError("dropout must lie in [0, 1)")
        if self.dtype not in ("float32", "float64"):
            raise ConfigurationError(f"Unsupported dtype: {self.dtype}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"Unknown network settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class LayerShape:
    in_channels: int
    out_channels: int
    in_size: Tuple[int, int]
    out_size: Tuple[int, int]


def widened_channels(channels, multiplier):
    """Round half-up to the nearest integer, at least 1"""
    return max(1, int(math.floor(channels * multiplier + 0.5)))


def _hyperparams(layer):
    return dict(zip(_HYPERPARAM_ORDER[layer.operation], layer.hyperparams))


_HYPERPARAM_ORDER = {
    "Conv": ("kernel_size", "batchnorm", "relu"),
    "DSepConv": ("kernel_size", "batchnorm", "relu"),
    "Pool": ("pool_type", "kernel_size", "channel_multiplier"),
    IDENTITY: (),
}


def check_decodable(architecture):
    for position, layer in enumerate(architecture.layers, start=1):
        if layer.operation not in _HYPERPARAM_ORDER:
            raise EvaluationError(f"Operation {layer.operation} at node {position} cannot be decoded")
        if layer.indegree != 1:
            raise EvaluationError(f"Node {position} has {layer.indegree} inputs; only sequential networks decode")


def infer_shapes(architecture, base_width, image_size) -> List[LayerShape]:
    """Per-node channel counts and spatial sizes, without building any layer"""
    check_decodable(architecture)

    channels = base_width
    size = tuple(image_size)
    shapes = []
    for layer in architecture.layers:
        out_channels, out_size = channels, size
        if layer.operation == "Pool":
            hp = _hyperparams(layer)
            stride = Pool2d.stride_for(*size)
            out_size = tuple(Pool2d.output_size(s, hp["kernel_size"], stride) for s in size)
            out_channels = widened_channels(channels, hp["channel_multiplier"])
        shapes.append(LayerShape(channels, out_channels, size, out_size))
        channels, size = out_channels, out_size
    return shapes


def infer_channels(architecture, base_width):
    """Input channel count of every hidden node, 1-based position -> channels"""
    channels = base_width
    result = {}
    for position, layer in enumerate(architecture.layers, start=1):
        result[position] = channels
        if layer.operation == "Pool":
            channels = widened_channels(channels, _hyperparams(layer)["channel_multiplier"])
    result["out"] = channels
    return result


class NodeBlock:
    """The modules expressing one hidden node, applied in order"""

    def __init__(self, layer, in_channels, out_channels, rng, dtype):
        self.layer = layer
        self.modules: List[Tuple[str, object]] = []
        hp = _hyperparams(layer)

        if layer.operation == "Conv":
            self.modules.append(("conv", Conv2d(in_channels, in_channels, hp["kernel_size"], rng, dtype)))
        elif layer.operation == "DSepConv":
            self.modules.append(("depthwise", DepthwiseConv2d(in_channels, hp["kernel_size"], rng, dtype)))
            self.modules.append(("pointwise", Conv2d(in_channels, in_channels, 1, rng, dtype)))
        elif layer.operation == "Pool":
            self.modules.append(("pool", Pool2d(hp["pool_type"], hp["kernel_size"])))
            if out_channels != in_channels:
                self.modules.append(("project", Conv2d(in_channels, out_channels, 1, rng, dtype)))

        if hp.get("batchnorm"):
            self.modules.append(("bn", BatchNorm(in_channels, dtype)))
        if hp.get("relu"):
            self.modules.append(("relu", ReLU()))

    def forward(self, x, training):
        for _, module in self.modules:
            x = module.forward(x, training)
        return x

    def backward(self, dout):
        for _, module in reversed(self.modules):
            dout = module.backward(dout)
        return dout


class Network:
    def __init__(self, architecture, input_shape, n_classes, config: NetworkConfig, rng):
        check_decodable(architecture)
        dtype = np.dtype(config.dtype)
        in_channels = input_shape[0]

        self.architecture = architecture
        self.input_shape = tuple(input_shape)
        self.n_classes = n_classes
        self.dtype = dtype
        self.shapes = infer_shapes(architecture, config.base_width, input_shape[1:])

        self.stem = [("conv", Conv2d(in_channels, config.base_width, 1, rng, dtype))]
        self.blocks = [
            NodeBlock(layer, shape.in_channels, shape.out_channels, rng, dtype)
            for layer, shape in zip(architecture.layers, self.shapes)
        ]

        width = self.shapes[-1].out_channels if self.shapes else config.base_width
        self.head = [
            ("pool", GlobalConcatPool()),
            ("bn", BatchNorm(2 * width, dtype)),
            ("dropout", Dropout(config.dropout, rng)),
            ("dense", Dense(2 * width, n_classes, rng, dtype)),
        ]

    @property
    def groups(self):
        """Module lists keyed by weight-store group: 'stem', node position, 'head'"""
        groups = {STEM: self.stem}
        for position, block in enumerate(self.blocks, start=1):
            groups[position] = block.modules
        groups[HEAD] = self.head
        return groups

    def forward(self, x, training=False):
        x = x.astype(self.dtype, copy=False)
        for _, module in self.stem:
            x = module.forward(x, training)
        for block in self.blocks:
            x = block.forward(x, training)
        for _, module in self.head:
            x = module.forward(x, training)
        return x

    def backward(self, dlogits):
        dout = dlogits
        for _, module in reversed(self.head):
            dout = module.backward(dout)
        for block in reversed(self.blocks):
            dout = block.backward(dout)
        for _, module in reversed(self.stem):
            dout = module.backward(dout)
        return dout

    def parameters(self):
        params = []
        for modules in self.groups.values():
            for _, module in modules:
                params.extend(module.parameters())
        return params

    def state(self):
        """Copy of every parameter and buffer, grouped as in a weight store"""
        state = {}
        for group, modules in self.groups.items():
            tensors = {}
            for module_name, module in modules:
                for name, value in list(module.params.items()) + list(module.buffers.items()):
                    tensors[f"{module_name}.{name}"] = value.copy()
            state[group] = tensors
        return state

    def load_state(self, state):
        """Overwrite the groups present in ``state``; other groups keep their initialization"""
        groups = self.groups
        for group, tensors in state.items():
            if group not in groups:
                raise EvaluationError(f"Weight group {group!r} does not exist in this network")
            modules = dict(groups[group])
            for key, value in tensors.items():
                module_name, name = key.split(".", 1)
                module = modules[module_name]
                target = module.params.get(name)
                if target is None:
                    target = module.buffers[name]
                if target.shape != value.shape:
                    raise EvaluationError(
                        f"Shape mismatch for {group}/{key}: expected {target.shape}, got {value.shape}"
                    )
                target[...] = value

    def predict_proba(self, images, batch_size=256):
        outputs = [
            softmax(self.forward(images[start:start + batch_size], training=False))
            for start in range(0, len(images), batch_size)
        ]
        return np.concatenate(outputs, axis=0)


def decode_and_build(architecture, input_shape, n_classes, config=None, rng=None):
    """Build a trainable network for a decodable architecture"""
    config = config or NetworkConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    return Network(architecture, input_shape, n_classes, config, rng)
