# -*- coding: utf-8 -*-
"""
Experiments that check the assumptions the search relies on: mutation
locality, the validity of partial evaluation, progressive growth and the
transfer of a found committee to another dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..committee import build_committee, ensemble_metrics
from ..evaluator.base import EvaluationJob, evaluate_all
from ..evaluator.neural.data import make_split
from ..evaluator.neural.evaluator import NeuralEvaluator
from ..evaluator.neural.network import NetworkConfig
from ..evaluator.neural.trainer import FullTrainConfig, TrainConfig, full_train
from ..genome import random_node
from ..log import get_logger
from ..mutation import MutationConfig, clone_and_mutate_unique
from ..search import AUGMENTED, Individual, unique_random_genome
from ..space import IDENTITY
from .stats import spearman

logger = get_logger(__name__)

OVERALL = "overall"


def _label(depth):
    return f"depth={depth}"


def _evaluate(evaluator, individuals, workers=1, data_seed=0):
    jobs = [EvaluationJob(i.genome, inherited=i.inherit, data_seed=data_seed) for i in individuals]
    for individual, result in zip(individuals, evaluate_all(evaluator, jobs, workers)):
        individual.affinity = result.affinity
        individual.weights = result.weights
        individual.inherit = None
    return individuals


def _random_individuals(space, depth, count, rng, taken):
    individuals = []
    for _ in range(count):
        genome = unique_random_genome(space, depth, rng, taken)
        if genome is None:
            continue
        individual = Individual(genome=genome)
        taken.add(individual.encoding)
        individuals.append(individual)
    return individuals


def _correlate(groups, x_key, y_key, alternative):
    """Spearman per depth group and over all groups; groups: label -> list of row dicts"""
    reports = {}
    pooled = []
    for label, rows in groups.items():
        pooled.extend(rows)
        if len(rows) >= 3:
            reports[label] = spearman([r[x_key] for r in rows], [r[y_key] for r in rows], alternative, label)
    if len(groups) > 1 and len(pooled) >= 3:
        reports[OVERALL] = spearman([r[x_key] for r in pooled], [r[y_key] for r in pooled], alternative, OVERALL)
    return reports


@dataclass
class LocalityReport:
    mean_correlation: Dict[str, object]
    std_correlation: Dict[str, object]
    pairs: List[dict] = field(default_factory=list)

    def to_dict(self):
        return {
            "mean_correlation": {k: v.to_dict() for k, v in self.mean_correlation.items()},
            "std_correlation": {k: v.to_dict() for k, v in self.std_correlation.items()},
        }


def locality_experiment(space, evaluator, n_parents, n_clones, depths, cfg: MutationConfig, rng,
                        alternative="two-sided", workers=1) -> LocalityReport:
    """
    Correlate each random parent's affinity with the mean and with the
    standard deviation of its mutated clones' affinities, per depth.
    """
    taken = set()
    groups = {}
    for depth in depths:
        parents = _evaluate(evaluator, _random_individuals(space, depth, n_parents, rng, taken), workers)

        clones_by_parent = []
        for parent in parents:
            genomes = clone_and_mutate_unique(parent, n_clones, taken, cfg, rng)
            clones = [Individual(genome=g, lineage=parent.encoding, inherit=parent.weights) for g in genomes]
            taken.update(c.encoding for c in clones)
            clones_by_parent.append(clones)

        flat = [c for clones in clones_by_parent for c in clones]
        _evaluate(evaluator, flat, workers)

        rows = []
        for parent, clones in zip(parents, clones_by_parent):
            if not clones:
                continue
            affinities = [c.affinity for c in clones]
            rows.append({
                "depth": depth,
                "parent_affinity": parent.affinity,
                "clone_mean": float(np.mean(affinities)),
                "clone_std": float(np.std(affinities)),
            })
        groups[_label(depth)] = rows
        logger.info(f"Locality at depth {depth}: {len(rows)} parents, {len(flat)} clones")

    return LocalityReport(
        mean_correlation=_correlate(groups, "parent_affinity", "clone_mean", alternative),
        std_correlation=_correlate(groups, "parent_affinity", "clone_std", alternative),
        pairs=[row for rows in groups.values() for row in rows],
    )


@dataclass
class ProgressiveReport:
    correlation: Dict[str, object]
    deltas: Dict[str, dict]
    pairs: List[dict] = field(default_factory=list)

    def to_dict(self):
        return {
            "correlation": {k: v.to_dict() for k, v in self.correlation.items()},
            "deltas": self.deltas,
        }


def _delta_summary(deltas):
    deltas = np.asarray(deltas, dtype=float)
    return {
        "n": int(len(deltas)),
        "mean": float(deltas.mean()),
        "median": float(np.median(deltas)),
        "std": float(deltas.std()),
        "positive_fraction": float((deltas > 0).mean()),
    }


def progressive_experiment(space, evaluator, n_genomes, depths, rng, force_identity=False,
                           alternative="two-sided", workers=1) -> ProgressiveReport:
    """
    Evaluate random genomes, append one layer to each (a random one, or an
    Identity layer when ``force_identity``), re-evaluate with inherited
    weights and correlate pre- and post-augmentation affinity.
    """
    taken = set()
    groups = {}
    for depth in depths:
        originals = _evaluate(evaluator, _random_individuals(space, depth, n_genomes, rng, taken), workers)

        grown = []
        for original in originals:
            operation = IDENTITY if force_identity else None
            node = random_node(space, depth + 1, rng, operation=operation)
            grown.append(Individual(genome=original.genome.appended(node), lineage=AUGMENTED,
                                    inherit=original.weights))
        _evaluate(evaluator, grown, workers)

        groups[_label(depth)] = [
            {"depth": depth, "pre": o.affinity, "post": g.affinity, "delta": g.affinity - o.affinity}
            for o, g in zip(originals, grown)
        ]

    deltas = {label: _delta_summary([r["delta"] for r in rows]) for label, rows in groups.items() if rows}
    pooled = [r["delta"] for rows in groups.values() for r in rows]
    if pooled:
        deltas[OVERALL] = _delta_summary(pooled)

    return ProgressiveReport(
        correlation=_correlate(groups, "pre", "post", alternative),
        deltas=deltas,
        pairs=[row for rows in groups.values() for row in rows],
    )


@dataclass
class PartialEvalReport:
    correlation: Dict[str, object]
    pairs: List[dict] = field(default_factory=list)

    def to_dict(self):
        return {"correlation": {k: v.to_dict() for k, v in self.correlation.items()}}


def partial_eval_experiment(space, dataset, n_genomes, depths, rng, train_cfg: Optional[TrainConfig] = None,
                            full_cfg: Optional[FullTrainConfig] = None,
                            network_cfg: Optional[NetworkConfig] = None, seed=0, inherit=True,
                            alternative="two-sided", workers=1) -> PartialEvalReport:
    """
    Partially evaluate random genomes, train each further on the full pool
    (from its partial weights, or from scratch when ``inherit`` is False) and
    correlate partial affinity with final validation accuracy.
    """
    train_cfg = train_cfg or TrainConfig()
    full_cfg = full_cfg or FullTrainConfig()
    network_cfg = network_cfg or NetworkConfig()

    evaluator = NeuralEvaluator(dataset, train_cfg, network_cfg, seed=seed)
    full_split = make_split(dataset, seed=[seed, 0], subset_fraction=1.0,
                            validation_fraction=train_cfg.validation_fraction)

    taken = set()
    groups = {}
    for depth in depths:
        individuals = _evaluate(evaluator, _random_individuals(space, depth, n_genomes, rng, taken), workers)
        rows = []
        for individual in individuals:
            outcome = full_train(individual.genome, individual.weights if inherit else None, dataset,
                                 full_split, full_cfg, train_cfg, network_cfg, seed)
            rows.append({
                "depth": depth,
                "encoding": individual.encoding,
                "partial_affinity": individual.affinity,
                "full_validation_accuracy": outcome.validation_accuracy,
                "full_test_accuracy": outcome.test_accuracy,
            })
        groups[_label(depth)] = rows
        logger.info(f"Partial evaluation check at depth {depth}: {len(rows)} genomes")

    return PartialEvalReport(
        correlation=_correlate(groups, "partial_affinity", "full_validation_accuracy", alternative),
        pairs=[row for rows in groups.values() for row in rows],
    )


@dataclass
class TransferReport:
    committee: dict
    ranking_correlation: object
    member_accuracies: List[float]

    def to_dict(self):
        return {
            "committee": self.committee,
            "ranking_correlation": self.ranking_correlation.to_dict() if self.ranking_correlation else None,
            "member_accuracies": self.member_accuracies,
        }


def transfer_experiment(population, target, retain="all", full_cfg: Optional[FullTrainConfig] = None,
                        train_cfg: Optional[TrainConfig] = None, network_cfg: Optional[NetworkConfig] = None,
                        seed=0) -> TransferReport:
    """
    Retrain the committee members found on one dataset from scratch on
    ``target`` and report the committee there, plus the rank correlation
    between source affinity and target test accuracy.
    """
    train_cfg = train_cfg or TrainConfig()
    full_cfg = full_cfg or FullTrainConfig()
    network_cfg = network_cfg or NetworkConfig()

    committee = build_committee(population, retain)
    split = make_split(target, seed=[seed, 0], subset_fraction=1.0,
                       validation_fraction=train_cfg.validation_fraction)

    probabilities = []
    accuracies = []
    evaluator = NeuralEvaluator(target, train_cfg, network_cfg, seed=seed)
    for member in committee.members:
        outcome = full_train(member.genome, None, target, split, full_cfg, train_cfg, network_cfg, seed)
        accuracies.append(outcome.test_accuracy)
        probabilities.append(evaluator.predict_proba(member.genome, outcome.weights, target.test_images))
        logger.info(f"Transferred {member.encoding}: test accuracy {outcome.test_accuracy:.4f}")

    report = ensemble_metrics(committee, np.stack(probabilities), target.test_labels)
    correlation = None
    if committee.size >= 3:
        correlation = spearman([m.affinity for m in committee.members], accuracies)

    return TransferReport(committee=report.to_dict(), ranking_correlation=correlation,
                          member_accuracies=accuracies)
