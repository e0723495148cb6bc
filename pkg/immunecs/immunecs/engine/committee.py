# -*- coding: utf-8 -*-
"""
Network committees: the final population combined by an affinity-weighted
soft majority vote.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from .exceptions import ArgumentError, ConfigurationError
from .search import select_n_best

ALL = "all"
WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class CommitteeConfig:
    retain: Union[str, float] = ALL
    weight_source: str = "affinity"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.retain != ALL and not (isinstance(self.retain, (int, float)) and 0 < self.retain <= 1):
            raise ConfigurationError(f"retain must be 'all' or a fraction in (0, 1], got {self.retain!r}")
        if self.weight_source not in ("affinity", "validation"):
            raise ConfigurationError(f"weight_source must be 'affinity' or 'validation', got {self.weight_source!r}")

    def to_dict(self):
        return {"retain": self.retain, "weight_source": self.weight_source}

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"retain", "weight_source"}
        if unknown:
            raise ConfigurationError(f"Unknown committee settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Committee:
    members: tuple
    weights: tuple

    def __post_init__(self):
        if not self.members:
            raise ArgumentError("A committee needs at least one member")
        if len(self.members) != len(self.weights):
            raise ArgumentError("Every committee member needs exactly one weight")
        if any(not w > 0 for w in self.weights):
            raise ArgumentError("Committee weights must be positive")

    @property
    def size(self):
        return len(self.members)

    @property
    def normalized_weights(self):
        weights = np.asarray(self.weights, dtype=float)
        return weights / weights.sum()

    def reweighted(self, weights):
        return Committee(members=self.members, weights=tuple(max(float(w), WEIGHT_FLOOR) for w in weights))


def retained_count(size, retain):
    if retain == ALL:
        return size
    return max(1, int(math.floor(size * retain + 0.5)))


def build_committee(pop, retain=ALL) -> Committee:
    """Retain members in selection order; each member is weighted by its affinity"""
    if not pop:
        raise ArgumentError("Cannot build a committee from an empty population")

    members = select_n_best(pop, retained_count(len(pop), retain))
    return Committee(
        members=tuple(members),
        weights=tuple(max(float(m.affinity), WEIGHT_FLOOR) for m in members),
    )


def combine(committee, member_probabilities):
    """
    Weighted average G of member class probabilities. ``member_probabilities``
    has shape (members, classes) for one sample or (members, samples, classes).
    """
    probabilities = np.asarray(member_probabilities, dtype=float)
    if probabilities.ndim not in (2, 3) or probabilities.shape[0] != committee.size:
        raise ArgumentError(
            f"Expected probabilities for {committee.size} members, got shape {probabilities.shape}"
        )
    return np.tensordot(committee.normalized_weights, probabilities, axes=(0, 0))


def soft_vote(committee, probability_vectors: Sequence[Sequence[float]]) -> int:
    """Class with the highest weighted probability; ties go to the lowest class index"""
    vectors = [np.asarray(v, dtype=float) for v in probability_vectors]
    if not vectors:
        raise ArgumentError("Soft voting needs at least one probability vector")
    if len({v.shape for v in vectors}) > 1:
        raise ArgumentError("Probability vectors differ in length")
    for vector in vectors:
        if vector.ndim != 1 or (vector < 0).any() or abs(vector.sum() - 1.0) > 1e-6:
            raise ArgumentError("Each probability vector must be non-negative and sum to 1")

    return int(np.argmax(combine(committee, np.stack(vectors))))


def predict(committee, member_probabilities):
    """Committee class per sample from (members, samples, classes) probabilities"""
    return combine(committee, member_probabilities).argmax(axis=1)


def disagreement_matrix(member_predictions):
    """Fraction of samples on which two members' predicted classes differ"""
    predictions = np.asarray(member_predictions)
    return (predictions[:, None, :] != predictions[None, :, :]).mean(axis=2)


@dataclass(frozen=True)
class EnsembleReport:
    committee_accuracy: float
    best_member_accuracy: float
    mean_member_accuracy: float
    ensemble_gain: float
    member_accuracies: List[float]
    member_encodings: List[str]
    weights: List[float]
    disagreement: List[List[float]]

    def to_dict(self):
        return {
            "committee_accuracy": self.committee_accuracy,
            "best_member_accuracy": self.best_member_accuracy,
            "mean_member_accuracy": self.mean_member_accuracy,
            "ensemble_gain": self.ensemble_gain,
            "member_accuracies": self.member_accuracies,
            "member_encodings": self.member_encodings,
            "weights": self.weights,
            "disagreement": self.disagreement,
        }


def ensemble_metrics(committee, member_probabilities, labels) -> EnsembleReport:
    """Committee accuracy, member accuracies, ensemble gain and pairwise disagreement"""
    probabilities = np.asarray(member_probabilities, dtype=float)
    labels = np.asarray(labels)
    if probabilities.ndim != 3 or probabilities.shape[1] != len(labels):
        raise ArgumentError("member_probabilities must have shape (members, samples, classes)")

    member_predictions = probabilities.argmax(axis=2)
    member_accuracies = (member_predictions == labels[None, :]).mean(axis=1)
    committee_accuracy = float((predict(committee, probabilities) == labels).mean())
    best = float(member_accuracies.max())

    return EnsembleReport(
        committee_accuracy=committee_accuracy,
        best_member_accuracy=best,
        mean_member_accuracy=float(member_accuracies.mean()),
        ensemble_gain=committee_accuracy - best,
        member_accuracies=[float(a) for a in member_accuracies],
        member_encodings=[getattr(m, "encoding", str(i)) for i, m in enumerate(committee.members)],
        weights=[float(w) for w in committee.normalized_weights],
        disagreement=disagreement_matrix(member_predictions).tolist(),
    )
