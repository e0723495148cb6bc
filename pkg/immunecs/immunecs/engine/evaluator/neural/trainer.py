# -*- coding: utf-8 -*-
"""
Partial evaluation and final retraining.

Both run mini-batch Adam with L2 weight decay and a cosine-annealed learning
rate that restarts at configured epochs. Partial evaluation trains on a
fraction of the pool with aggressive early stopping and keeps the weights of
the best validation epoch.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ...exceptions import ConfigurationError, EvaluationError
from ...genome import discretize_genome, encode_string
from ...log import get_logger
from ..base import Evaluation
from .data import pad_and_crop
from .layers import softmax_cross_entropy
from .network import NetworkConfig, decode_and_build
from .weights import WeightStore, inherit_weights

logger = get_logger(__name__)


def _check_restarts(restarts, epochs, label):
    for epoch in restarts:
        if not 0 < epoch < epochs:
            raise ConfigurationError(f"{label} restart epoch {epoch} must lie in (0, {epochs})")
    if list(restarts) != sorted(set(restarts)):
        raise ConfigurationError(f"{label} restart epochs must be strictly increasing")


@dataclass(frozen=True)
class TrainConfig:
    subset_fraction: float = 0.2
    validation_fraction: float = 0.2
    early_stop_patience: int = 2
    early_stop_threshold: float = 0.005
    max_epochs: int = 15
    batch_size: int = 64
    learning_rate: float = 0.01
    weight_decay: float = 1e-5
    beta1: float = 0.95
    beta2: float = 0.99
    cosine_annealing: bool = True
    restarts: Tuple[int, ...] = ()
    pad: int = 0

    def __post_init__(self):
        object.__setattr__(self, "restarts", tuple(self.restarts))
        self.validate()

    def validate(self):
        if not 0 < self.subset_fraction <= 1:
            raise ConfigurationError("subset_fraction must lie in (0, 1]")
        if not 0 < self.validation_fraction < 1:
            raise ConfigurationError("validation_fraction must lie in (0, 1)")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be at least 1")
        if self.early_stop_patience < 1:
            raise ConfigurationError("early_stop_patience must be at least 1")
        if self.early_stop_threshold < 0:
            raise ConfigurationError("early_stop_threshold must not be negative")
        if self.batch_size < 2:
            raise ConfigurationError("batch_size must be at least 2")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ConfigurationError("weight_decay must not be negative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigurationError("Adam betas must lie in [0, 1)")
        if self.pad < 0:
            raise ConfigurationError("pad must not be negative")
        _check_restarts(self.restarts, self.max_epochs, "Training")

    def to_dict(self):
        data = asdict(self)
        data["restarts"] = list(self.restarts)
        return data

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"Unknown training settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class FullTrainConfig:
    epochs: int = 50
    restarts: Tuple[int, ...] = (25,)
    lr_scale: float = 1.0 / 3.0

    def __post_init__(self):
        object.__setattr__(self, "restarts", tuple(self.restarts))
        self.validate()

    def validate(self):
        if self.epochs < 0:
            raise ConfigurationError("Full training epochs must not be negative")
        if not self.lr_scale > 0:
            raise ConfigurationError("lr_scale must be positive")
        if self.epochs:
            _check_restarts(self.restarts, self.epochs, "Full training")

    def to_dict(self):
        return {"epochs": self.epochs, "restarts": list(self.restarts), "lr_scale": self.lr_scale}

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"Unknown full training settings: {sorted(unknown)}")
        return cls(**data)


def cosine_learning_rate(base_lr, progress, total_epochs, restarts=(), annealing=True):
    """Learning rate at fractional epoch ``progress``; each cycle anneals from base_lr towards 0"""
    if not annealing:
        return base_lr

    bounds = [0] + list(restarts) + [total_epochs]
    for start, end in zip(bounds, bounds[1:]):
        if progress < end:
            return base_lr * 0.5 * (1.0 + math.cos(math.pi * (progress - start) / (end - start)))
    return 0.0


class Adam:
    def __init__(self, parameters, beta1=0.95, beta2=0.99, weight_decay=0.0, eps=1e-8):
        self.parameters = parameters
        self.beta1 = beta1
        self.beta2 = beta2
        self.weight_decay = weight_decay
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(module.params[name]) for module, name in parameters]
        self.v = [np.zeros_like(module.params[name]) for module, name in parameters]

    def step(self, lr):
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t

        for index, (module, name) in enumerate(self.parameters):
            param = module.params[name]
            grad = module.grads[name]
            if self.weight_decay:
                grad = grad + self.weight_decay * param

            self.m[index] = self.beta1 * self.m[index] + (1 - self.beta1) * grad
            self.v[index] = self.beta2 * self.v[index] + (1 - self.beta2) * grad * grad
            update = (self.m[index] / correction1) / (np.sqrt(self.v[index] / correction2) + self.eps)
            param -= (lr * update).astype(param.dtype)


def accuracy(network, images, labels, batch_size=256):
    if len(labels) == 0:
        return 0.0
    probabilities = network.predict_proba(images, batch_size)
    return float((probabilities.argmax(axis=1) == labels).mean())


def train_epoch(network, optimizer, images, labels, epoch, total_epochs, base_lr, cfg, restarts, rng):
    """One pass over shuffled mini-batches; returns the mean loss"""
    order = rng.permutation(len(labels))
    if cfg.pad:
        images = pad_and_crop(images, cfg.pad, rng)

    n_batches = max(1, math.ceil(len(order) / cfg.batch_size))
    losses = []
    for batch in range(n_batches):
        index = order[batch * cfg.batch_size:(batch + 1) * cfg.batch_size]
        if len(index) < 2:
            continue

        lr = cosine_learning_rate(base_lr, epoch + batch / n_batches, total_epochs, restarts,
                                  cfg.cosine_annealing)
        logits = network.forward(images[index], training=True)
        loss, dlogits = softmax_cross_entropy(logits, labels[index])
        if not math.isfinite(loss):
            raise EvaluationError(f"Non-finite training loss in epoch {epoch + 1}")

        network.backward(dlogits)
        optimizer.step(lr)
        losses.append(loss)

    return float(np.mean(losses)) if losses else 0.0


@dataclass
class TrainingOutcome:
    best_accuracy: float
    best_state: dict
    epochs: int
    history: List[float] = field(default_factory=list)


def fit(network, split, cfg: TrainConfig, rng, max_epochs=None, base_lr=None, restarts=None,
        early_stopping=True) -> TrainingOutcome:
    """Train and keep the state of the best validation epoch"""
    max_epochs = cfg.max_epochs if max_epochs is None else max_epochs
    base_lr = cfg.learning_rate if base_lr is None else base_lr
    restarts = cfg.restarts if restarts is None else restarts

    optimizer = Adam(network.parameters(), cfg.beta1, cfg.beta2, cfg.weight_decay)
    best_accuracy = -1.0
    best_state = network.state()
    reference = -1.0
    stale = 0
    history = []

    for epoch in range(max_epochs):
        train_epoch(network, optimizer, split.train_images, split.train_labels,
                    epoch, max_epochs, base_lr, cfg, restarts, rng)
        validation = accuracy(network, split.validation_images, split.validation_labels)
        history.append(validation)

        if validation > best_accuracy:
            best_accuracy = validation
            best_state = network.state()

        if validation > reference + cfg.early_stop_threshold:
            reference = validation
            stale = 0
        else:
            stale += 1

        if early_stopping and stale >= cfg.early_stop_patience:
            break

    if not history:
        best_accuracy = accuracy(network, split.validation_images, split.validation_labels)

    return TrainingOutcome(best_accuracy=best_accuracy, best_state=best_state,
                           epochs=len(history), history=history)


def network_seed(encoding, seed):
    return [int(seed), zlib.crc32(encoding.encode())]


def build_for(architecture, input_shape, n_classes, network_cfg, seed, inherited=None):
    """Build a network, seeded by its encoding, and load any inherited weights"""
    encoding = encode_string(architecture)
    network = decode_and_build(architecture, input_shape, n_classes, network_cfg,
                               np.random.default_rng(network_seed(encoding, seed)))
    if inherited is not None:
        network.load_state(inherited.groups)
    return network


def partial_evaluate(genome, inherited: Optional[WeightStore], split, n_classes, cfg: TrainConfig,
                     network_cfg: Optional[NetworkConfig] = None, seed=0, data_seed=0) -> Evaluation:
    """Best validation accuracy under partial training, with the best-epoch weights"""
    network_cfg = network_cfg or NetworkConfig()
    architecture = discretize_genome(genome)
    encoding = encode_string(architecture)

    partial = None
    if inherited is not None:
        partial = inherit_weights(inherited, inherited.architecture, architecture)

    network = build_for(architecture, split.train_images.shape[1:], n_classes, network_cfg, seed, partial)
    rng = np.random.default_rng(network_seed(encoding, seed) + [int(data_seed)])

    try:
        outcome = fit(network, split, cfg, rng)
    except EvaluationError as e:
        logger.error(f"Partial training of {encoding} aborted: {str(e)}")
        return Evaluation(affinity=0.0, failed=True, error=str(e))

    return Evaluation(
        affinity=outcome.best_accuracy,
        weights=WeightStore(architecture=architecture, groups=outcome.best_state),
        epochs=outcome.epochs,
    )


@dataclass(frozen=True)
class FullTrainResult:
    validation_accuracy: float
    test_accuracy: float
    weights: WeightStore
    epochs: int


def full_train(genome, weights: WeightStore, dataset, split, full_cfg: FullTrainConfig, cfg: TrainConfig,
               network_cfg: Optional[NetworkConfig] = None, seed=0) -> FullTrainResult:
    """
    Continue training from ``weights`` on ``split`` for ``full_cfg.epochs``
    epochs (no early stopping) and report validation and test accuracy of the
    final network.
    """
    network_cfg = network_cfg or NetworkConfig()
    architecture = discretize_genome(genome)
    encoding = encode_string(architecture)
    network = build_for(architecture, dataset.input_shape, dataset.n_classes, network_cfg, seed, weights)

    if full_cfg.epochs:
        rng = np.random.default_rng(network_seed(encoding, seed) + [1])
        fit(network, split, cfg, rng, max_epochs=full_cfg.epochs,
            base_lr=cfg.learning_rate * full_cfg.lr_scale, restarts=full_cfg.restarts,
            early_stopping=False)

    return FullTrainResult(
        validation_accuracy=accuracy(network, split.validation_images, split.validation_labels),
        test_accuracy=accuracy(network, dataset.test_images, dataset.test_labels),
        weights=WeightStore(architecture=architecture, groups=network.state()),
        epochs=full_cfg.epochs,
    )
