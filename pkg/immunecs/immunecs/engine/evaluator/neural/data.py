# -*- coding: utf-8 -*-
"""
Desk-scale image data.

A seeded procedural generator draws noisy parametric shapes on a small
single-channel canvas, one shape family per class. External data is read from
a flat binary file: a fixed header followed by raw float32 samples and int32
labels for the training pool and the test set.
"""

from __future__ import annotations

import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ...exceptions import ConfigurationError
from ...log import get_logger

logger = get_logger(__name__)

MAGIC = b"IMNC"
FORMAT_VERSION = 1
# magic, version, n_train, n_test, channels, height, width, n_classes
HEADER = struct.Struct("<4s7I")

SHAPE_FAMILIES = (
    "horizontal_bar",
    "vertical_bar",
    "disc",
    "ring",
    "diagonal",
    "anti_diagonal",
    "plus",
    "square",
    "cross",
    "two_dots",
)


@dataclass(frozen=True)
class DatasetConfig:
    source: str = "procedural"
    path: Optional[str] = None
    n_classes: int = 4
    image_size: int = 16
    train_size: int = 2000
    test_size: int = 500
    noise: float = 0.25
    variant: int = 0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.source not in ("procedural", "file"):
            raise ConfigurationError(f"Unknown dataset source: {self.source}")
        if self.source == "file" and not self.path:
            raise ConfigurationError("A file dataset needs a path")
        if not 2 <= self.n_classes <= len(SHAPE_FAMILIES):
            raise ConfigurationError(f"n_classes must lie in [2, {len(SHAPE_FAMILIES)}]")
        if self.image_size < 8:
            raise ConfigurationError("image_size must be at least 8")
        if self.train_size < self.n_classes or self.test_size < 1:
            raise ConfigurationError("Dataset sizes are too small")
        if self.noise < 0:
            raise ConfigurationError("noise must not be negative")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"Unknown dataset settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Dataset:
    train_images: np.ndarray
    train_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray
    n_classes: int

    @property
    def input_shape(self):
        return tuple(self.train_images.shape[1:])


@dataclass(frozen=True)
class DataSplit:
    train_images: np.ndarray
    train_labels: np.ndarray
    validation_images: np.ndarray
    validation_labels: np.ndarray


def _draw(family, size, rng, variant):
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    cy, cx = size / 2 - 0.5 + rng.uniform(-2, 2, 2)
    half = size * rng.uniform(0.25, 0.38)
    thick = rng.uniform(1.0, 2.2)
    dy, dx = yy - cy, xx - cx
    radius = np.hypot(dy, dx)

    if family == "horizontal_bar":
        mask = (np.abs(dy) <= thick) & (np.abs(dx) <= half)
    elif family == "vertical_bar":
        mask = (np.abs(dx) <= thick) & (np.abs(dy) <= half)
    elif family == "disc":
        mask = radius <= half * 0.8
    elif family == "ring":
        mask = np.abs(radius - half * 0.8) <= thick * 0.7
    elif family == "diagonal":
        mask = (np.abs(dy - dx) <= thick * 1.2) & (radius <= half * 1.2)
    elif family == "anti_diagonal":
        mask = (np.abs(dy + dx) <= thick * 1.2) & (radius <= half * 1.2)
    elif family == "plus":
        mask = ((np.abs(dy) <= thick * 0.7) | (np.abs(dx) <= thick * 0.7)) & (np.maximum(np.abs(dy), np.abs(dx)) <= half)
    elif family == "square":
        edge = np.maximum(np.abs(dy), np.abs(dx))
        mask = np.abs(edge - half * 0.8) <= thick * 0.6
    elif family == "cross":
        mask = ((np.abs(dy - dx) <= thick) | (np.abs(dy + dx) <= thick)) & (radius <= half * 1.1)
    else:
        offset = half * 0.6
        mask = (np.hypot(dy - offset, dx - offset) <= thick * 1.5) | (np.hypot(dy + offset, dx + offset) <= thick * 1.5)

    image = mask.astype(float) * rng.uniform(0.6, 1.0)
    if variant:
        # distractor stroke across the canvas
        row = rng.integers(0, size)
        image[row, :] = np.maximum(image[row, :], rng.uniform(0.2, 0.5))
        image = 1.0 - image if rng.random() < 0.5 else image
    return image


def _sample(cfg, count, rng):
    labels = rng.integers(0, cfg.n_classes, size=count)
    images = np.empty((count, 1, cfg.image_size, cfg.image_size), dtype=np.float32)
    for index, label in enumerate(labels):
        image = _draw(SHAPE_FAMILIES[label], cfg.image_size, rng, cfg.variant)
        image = image + rng.normal(0.0, cfg.noise, image.shape)
        images[index, 0] = image
    return images, labels.astype(np.int64)


def make_procedural_dataset(cfg: DatasetConfig) -> Dataset:
    """Seeded k-class shape dataset; equal configs give identical arrays"""
    rng = np.random.default_rng([cfg.seed, cfg.variant])
    train_images, train_labels = _sample(cfg, cfg.train_size, rng)
    test_images, test_labels = _sample(cfg, cfg.test_size, rng)

    mean, std = float(train_images.mean()), float(train_images.std()) or 1.0
    return Dataset(
        train_images=((train_images - mean) / std).astype(np.float32),
        train_labels=train_labels,
        test_images=((test_images - mean) / std).astype(np.float32),
        test_labels=test_labels,
        n_classes=cfg.n_classes,
    )


def save_dataset(dataset: Dataset, path):
    c, h, w = dataset.input_shape
    with Path(path).open("wb") as f:
        f.write(HEADER.pack(MAGIC, FORMAT_VERSION, len(dataset.train_labels), len(dataset.test_labels),
                            c, h, w, dataset.n_classes))
        f.write(dataset.train_images.astype("<f4").tobytes())
        f.write(dataset.train_labels.astype("<i4").tobytes())
        f.write(dataset.test_images.astype("<f4").tobytes())
        f.write(dataset.test_labels.astype("<i4").tobytes())


def load_dataset(path) -> Dataset:
    """Read a dataset in the flat binary format"""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Dataset file not found: {path}")

    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        raise ConfigurationError(f"Dataset file {path} is truncated")

    magic, version, n_train, n_test, c, h, w, n_classes = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ConfigurationError(f"Dataset file {path} has a bad magic header")
    if version != FORMAT_VERSION:
        raise ConfigurationError(f"Unsupported dataset format version {version}")

    sample = c * h * w
    expected = HEADER.size + 4 * (n_train * sample + n_train + n_test * sample + n_test)
    if len(raw) != expected:
        raise ConfigurationError(f"Dataset file {path} has {len(raw)} bytes, expected {expected}")

    offset = HEADER.size

    def take(dtype, count):
        nonlocal offset
        array = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
        offset += 4 * count
        return array

    train_images = take("<f4", n_train * sample).reshape(n_train, c, h, w)
    train_labels = take("<i4", n_train)
    test_images = take("<f4", n_test * sample).reshape(n_test, c, h, w)
    test_labels = take("<i4", n_test)

    for labels in (train_labels, test_labels):
        if len(labels) and (labels.min() < 0 or labels.max() >= n_classes):
            raise ConfigurationError(f"Dataset file {path} has labels outside [0, {n_classes})")

    logger.info(f"Loaded dataset {path}: {n_train} train, {n_test} test, {n_classes} classes")
    return Dataset(
        train_images=train_images.astype(np.float32),
        train_labels=train_labels.astype(np.int64),
        test_images=test_images.astype(np.float32),
        test_labels=test_labels.astype(np.int64),
        n_classes=int(n_classes),
    )


def build_dataset(cfg: DatasetConfig) -> Dataset:
    if cfg.source == "file":
        return load_dataset(cfg.path)
    return make_procedural_dataset(cfg)


def make_split(dataset: Dataset, seed, subset_fraction=1.0, validation_fraction=0.2) -> DataSplit:
    """
    Hold out ``validation_fraction`` of the training pool, then keep
    ``subset_fraction`` of the whole pool (at most the remainder) for training.
    """
    if not 0 < subset_fraction <= 1:
        raise ConfigurationError("subset_fraction must lie in (0, 1]")
    if not 0 < validation_fraction < 1:
        raise ConfigurationError("validation_fraction must lie in (0, 1)")

    total = len(dataset.train_labels)
    order = np.random.default_rng(seed).permutation(total)
    n_val = max(1, int(round(total * validation_fraction)))
    n_train = max(1, min(total - n_val, int(round(total * subset_fraction))))

    val_index = order[:n_val]
    train_index = order[n_val:n_val + n_train]
    return DataSplit(
        train_images=dataset.train_images[train_index],
        train_labels=dataset.train_labels[train_index],
        validation_images=dataset.train_images[val_index],
        validation_labels=dataset.train_labels[val_index],
    )


def pad_and_crop(images, pad, rng):
    """Zero-pad by ``pad`` pixels and crop back at a random offset per image"""
    if pad <= 0:
        return images
    n, c, h, w = images.shape
    padded = np.pad(images, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    rows = rng.integers(0, 2 * pad + 1, size=n)
    cols = rng.integers(0, 2 * pad + 1, size=n)
    out = np.empty_like(images)
    for index in range(n):
        out[index] = padded[index, :, rows[index]:rows[index] + h, cols[index]:cols[index] + w]
    return out
