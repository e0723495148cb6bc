# -*- coding: utf-8 -*-
"""
Affinity-scaled clone mutation.

The mutation rate falls exponentially with the parent's affinity and the
perturbation strength grows linearly towards the most recent layer. A clone
either changes its connectivity or its layers, never both.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import List, Optional

from .exceptions import ArgumentError, ConfigurationError
from .genome import (
    NodeGene,
    discretize,
    discretize_genome,
    encode_string,
    expressed_indegree,
    expressed_operation,
    expressed_second_input,
)
from .log import get_logger

logger = get_logger(__name__)

CONNECTION = "connection"
AGGREGATION = "aggregation"
OPERATION = "operation"
HYPERPARAMETERS = "hyperparameters"
UNCHANGED = "unchanged"


@dataclass(frozen=True)
class MutationConfig:
    rho: float = 0.2
    operation_gene_sigma_scale: float = 1.0
    max_retries: int = 20

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.rho > 0:
            raise ConfigurationError(f"Mutation factor rho must be positive, got {self.rho}")
        if not self.operation_gene_sigma_scale > 0:
            raise ConfigurationError("operation_gene_sigma_scale must be positive")
        if self.max_retries < 1:
            raise ConfigurationError("max_retries must be at least 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"rho", "operation_gene_sigma_scale", "max_retries"}
        if unknown:
            raise ConfigurationError(f"Unknown mutation settings: {sorted(unknown)}")
        return cls(**data)


def mutation_rate(parent_affinity, rho):
    """alpha = exp(-f_parent / rho)"""
    if not rho > 0:
        raise ConfigurationError(f"Mutation factor rho must be positive, got {rho}")
    if not 0.0 <= parent_affinity <= 1.0:
        raise ArgumentError(f"Parent affinity must lie in [0, 1], got {parent_affinity}")
    return math.exp(-parent_affinity / rho)


def mutation_sigma(alpha, layer_index, depth):
    """sigma = alpha * (l + 1) / L with a zero-based layer index"""
    if not 0 <= layer_index < depth:
        raise ArgumentError(f"Layer index {layer_index} out of range for depth {depth}")
    return alpha * (layer_index + 1) / depth


def perturbation(sigma, rng):
    """Raw N(0, sigma^2) step before clamping"""
    if sigma <= 0:
        return 0.0
    return float(rng.normal(0.0, sigma))


def perturb(gene, sigma, rng):
    """Add a perturbation step and clamp to [0, 1]"""
    if sigma <= 0:
        return gene
    return min(1.0, max(0.0, gene + perturbation(sigma, rng)))


def _perturb_connections(node, position, space, sigma, rng):
    """Perturb the connectivity genes of one node; returns (node, changed)"""
    old_indegree = expressed_indegree(node, space, position)
    old_second = expressed_second_input(node, position) if old_indegree == 2 else None

    indegree_gene = perturb(node.indegree_gene, sigma, rng)
    second_input_gene = node.second_input_gene
    new_indegree = discretize(indegree_gene, space.indegree_choices(position))

    if new_indegree == 2:
        if old_indegree == 1:
            # uniform over the predecessors v_0 .. v_{l-2}
            second_input_gene = float(rng.random())
        else:
            second_input_gene = perturb(node.second_input_gene, sigma, rng)

    mutated = NodeGene(indegree_gene, second_input_gene, node.aggregation_gene,
                       node.operation_gene, node.hyperparam_genes)
    new_second = expressed_second_input(mutated, position) if new_indegree == 2 else None

    return mutated, (new_indegree, new_second) != (old_indegree, old_second)


def _perturb_layer(node, position, space, sigma, cfg, rng):
    """Aggregation, then operation type, then hyperparameters; stop at the first discrete change"""
    if expressed_indegree(node, space, position) == 2:
        old = discretize(node.aggregation_gene, space.aggregation_choices)
        aggregation_gene = perturb(node.aggregation_gene, sigma, rng)
        node = NodeGene(node.indegree_gene, node.second_input_gene, aggregation_gene,
                        node.operation_gene, node.hyperparam_genes)
        if discretize(aggregation_gene, space.aggregation_choices) != old:
            return node

    old_operation = expressed_operation(node, space)
    operation_gene = perturb(node.operation_gene, sigma * cfg.operation_gene_sigma_scale, rng)
    new_operation = discretize(operation_gene, space.operation_names)

    if new_operation != old_operation:
        arity = space.operation(new_operation).arity
        hyperparam_genes = tuple(float(rng.random()) for _ in range(arity))
    else:
        hyperparam_genes = tuple(perturb(g, sigma, rng) for g in node.hyperparam_genes)

    return NodeGene(node.indegree_gene, node.second_input_gene, node.aggregation_gene,
                    operation_gene, hyperparam_genes)


def mutate_clone(clone, parent_affinity, cfg, rng):
    """Apply the clone mutation sequence to a copy of the parent genome"""
    space = clone.space
    depth = clone.depth
    alpha = mutation_rate(parent_affinity, cfg.rho)

    if space.max_indegree > 1:
        nodes = list(clone.nodes)
        connections_changed = False
        for index in range(1, depth):
            sigma = mutation_sigma(alpha, index, depth)
            nodes[index], changed = _perturb_connections(nodes[index], index + 1, space, sigma, rng)
            connections_changed = connections_changed or changed

        if connections_changed:
            return replace(clone, nodes=tuple(nodes))

        # connectivity genes still carry their sub-bin perturbations
        clone = replace(clone, nodes=tuple(nodes))

    nodes = list(clone.nodes)
    for index in range(depth):
        sigma = mutation_sigma(alpha, index, depth)
        nodes[index] = _perturb_layer(nodes[index], index + 1, space, sigma, cfg, rng)

    return replace(clone, nodes=tuple(nodes))


def classify_changes(parent_architecture, clone_architecture):
    """Per-node change category between two discrete architectures of equal depth"""
    categories = []
    for old, new in zip(parent_architecture.layers, clone_architecture.layers):
        if old.inputs != new.inputs:
            categories.append(CONNECTION)
        elif old.aggregation != new.aggregation:
            categories.append(AGGREGATION)
        elif old.operation != new.operation:
            categories.append(OPERATION)
        elif old.hyperparams != new.hyperparams:
            categories.append(HYPERPARAMETERS)
        else:
            categories.append(UNCHANGED)
    return categories


@dataclass(frozen=True)
class MutationRecord:
    parent: str
    clone: str
    alpha: float
    attempts: int
    changes: tuple

    def to_dict(self):
        return {
            "parent": self.parent,
            "clone": self.clone,
            "alpha": self.alpha,
            "attempts": self.attempts,
            "changes": list(self.changes),
        }


class MutationJournal:
    """Collects mutation records and writes them as JSON lines"""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.records: List[MutationRecord] = []

    def record(self, record):
        self.records.append(record)
        if self.path:
            with self.path.open("a") as f:
                f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def clone_and_mutate_unique(parent, n_c, registry, cfg, rng, journal: Optional[MutationJournal] = None):
    """
    Produce up to ``n_c`` mutated clones of ``parent`` whose encodings are not in
    ``registry`` nor among each other. Each clone is re-mutated from the parent
    up to ``cfg.max_retries`` times; clones that stay duplicates are dropped.
    """
    if n_c < 1:
        raise ArgumentError(f"n_c must be at least 1, got {n_c}")

    parent_affinity = parent.affinity or 0.0
    parent_architecture = discretize_genome(parent.genome)
    parent_encoding = encode_string(parent_architecture)
    alpha = mutation_rate(parent_affinity, cfg.rho)

    accepted = []
    taken = set()
    for _ in range(n_c):
        for attempt in range(1, cfg.max_retries + 1):
            genome = mutate_clone(parent.genome, parent_affinity, cfg, rng)
            architecture = discretize_genome(genome)
            encoding = encode_string(architecture)
            if encoding in registry or encoding in taken:
                continue

            taken.add(encoding)
            accepted.append(genome)
            if journal is not None:
                journal.record(MutationRecord(
                    parent=parent_encoding,
                    clone=encoding,
                    alpha=alpha,
                    attempts=attempt,
                    changes=tuple(classify_changes(parent_architecture, architecture)),
                ))
            break
        else:
            logger.info(f"Dropped clone of {parent_encoding}: no novel mutation after {cfg.max_retries} attempts")

    return accepted
