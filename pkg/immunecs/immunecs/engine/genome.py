# -*- coding: utf-8 -*-
"""
Continuous-encoded DAG genomes.

A genome is an ordered list of hidden-layer node genes. Every gene is a real
number in [0, 1]; the expressed architecture is obtained by binning each gene
into the discrete choices that are legal at its position. The input node v_0 and
the classifier head are implicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence, Tuple

from .exceptions import ArgumentError, ConfigurationError
from .space import SearchSpace, render_value


def discretize(gene, choices):
    """Bin ``gene`` into one of ``choices``; floor(gene * K) clamped to K - 1"""
    count = len(choices)
    if count == 0:
        raise ConfigurationError("Cannot discretize over an empty choice list")
    return choices[min(int(math.floor(gene * count)), count - 1)]


def _check_gene(value, label):
    if not 0.0 <= value <= 1.0:
        raise ArgumentError(f"{label} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class NodeGene:
    indegree_gene: float
    second_input_gene: float
    aggregation_gene: float
    operation_gene: float
    hyperparam_genes: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "hyperparam_genes", tuple(float(g) for g in self.hyperparam_genes))
        _check_gene(self.indegree_gene, "indegree_gene")
        _check_gene(self.second_input_gene, "second_input_gene")
        _check_gene(self.aggregation_gene, "aggregation_gene")
        _check_gene(self.operation_gene, "operation_gene")
        for gene in self.hyperparam_genes:
            _check_gene(gene, "hyperparam_gene")

    def genes(self):
        return (self.indegree_gene, self.second_input_gene, self.aggregation_gene,
                self.operation_gene) + self.hyperparam_genes

    def to_dict(self):
        return {
            "indegree": self.indegree_gene,
            "second_input": self.second_input_gene,
            "aggregation": self.aggregation_gene,
            "operation": self.operation_gene,
            "hyperparams": list(self.hyperparam_genes),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            indegree_gene=float(data["indegree"]),
            second_input_gene=float(data["second_input"]),
            aggregation_gene=float(data["aggregation"]),
            operation_gene=float(data["operation"]),
            hyperparam_genes=tuple(data["hyperparams"]),
        )


@dataclass(frozen=True)
class LayerSpec:
    """One expressed hidden layer; ``inputs`` holds node indices (0 is the input node)"""
    operation: str
    hyperparams: Tuple[object, ...]
    inputs: Tuple[int, ...]
    aggregation: Optional[str] = None

    @property
    def indegree(self):
        return len(self.inputs)

    @property
    def second_input(self):
        return self.inputs[1] if len(self.inputs) > 1 else None


@dataclass(frozen=True)
class DiscreteArchitecture:
    layers: Tuple[LayerSpec, ...]

    @property
    def depth(self):
        return len(self.layers)


@dataclass(frozen=True)
class ArchitectureGenome:
    nodes: Tuple[NodeGene, ...]
    space: SearchSpace

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not self.nodes:
            raise ArgumentError("A genome needs at least one hidden node")

        for position, node in enumerate(self.nodes, start=1):
            op = self.space.operation(expressed_operation(node, self.space))
            if len(node.hyperparam_genes) != op.arity:
                raise ArgumentError(
                    f"Node {position} expresses {op.name} with {op.arity} hyperparameters "
                    f"but carries {len(node.hyperparam_genes)} genes"
                )

    @property
    def depth(self):
        return len(self.nodes)

    def with_node(self, index, node):
        nodes = list(self.nodes)
        nodes[index] = node
        return replace(self, nodes=tuple(nodes))

    def appended(self, node):
        return replace(self, nodes=self.nodes + (node,))

    def flat_genes(self):
        return tuple(g for node in self.nodes for g in node.genes())

    def to_dict(self):
        return {"space": self.space.name, "nodes": [node.to_dict() for node in self.nodes]}

    @classmethod
    def from_dict(cls, data, space):
        if data.get("space", space.name) != space.name:
            raise ArgumentError(f"Genome belongs to space {data['space']}, not {space.name}")
        return cls(nodes=tuple(NodeGene.from_dict(n) for n in data["nodes"]), space=space)


def expressed_operation(node, space):
    return discretize(node.operation_gene, space.operation_names)


def expressed_indegree(node, space, position):
    return discretize(node.indegree_gene, space.indegree_choices(position))


def expressed_second_input(node, position):
    """Second-input index k in {0, ..., position - 2}, re-binned over the current range"""
    return discretize(node.second_input_gene, range(position - 1))


def _uniform(rng):
    return float(rng.random())


def random_node(space, position, rng, operation=None):
    """Sample a node for 1-based ``position`` with every gene uniform on [0, 1]"""
    indegree_gene = _uniform(rng)
    second_input_gene = _uniform(rng)
    aggregation_gene = _uniform(rng)
    operation_gene = _uniform(rng)

    if operation is not None:
        names = space.operation_names
        index = names.index(operation)
        # centre of the bin keeps the expressed operation fixed
        operation_gene = (index + 0.5) / len(names)

    op = space.operation(discretize(operation_gene, space.operation_names))
    hyperparam_genes = tuple(_uniform(rng) for _ in range(op.arity))

    return NodeGene(indegree_gene, second_input_gene, aggregation_gene,
                    operation_gene, hyperparam_genes)


def random_genome(space, depth, rng):
    """Sample a genome of ``depth`` hidden nodes"""
    if depth < 1:
        raise ArgumentError(f"Genome depth must be at least 1, got {depth}")

    return ArchitectureGenome(
        nodes=tuple(random_node(space, position, rng) for position in range(1, depth + 1)),
        space=space,
    )


def discretize_node(node, space, position):
    op = space.operation(expressed_operation(node, space))
    hyperparams = tuple(
        discretize(gene, hp.values) for gene, hp in zip(node.hyperparam_genes, op.hyperparams)
    )

    if expressed_indegree(node, space, position) == 2:
        inputs = (position - 1, expressed_second_input(node, position))
        aggregation = discretize(node.aggregation_gene, space.aggregation_choices)
    else:
        inputs = (position - 1,)
        aggregation = None

    return LayerSpec(operation=op.name, hyperparams=hyperparams, inputs=inputs,
                     aggregation=aggregation)


def discretize_genome(genome):
    return DiscreteArchitecture(layers=tuple(
        discretize_node(node, genome.space, position)
        for position, node in enumerate(genome.nodes, start=1)
    ))


def encode_layer(layer):
    second = "-" if layer.second_input is None else str(layer.second_input)
    aggregation = "-" if layer.aggregation is None else layer.aggregation[0]
    values = ",".join(render_value(v) for v in layer.hyperparams)
    return f"in={second}|agg={aggregation}|op={layer.operation}|h={values}"


def encode_string(architecture):
    """Canonical string of a discrete architecture, used for deduplication"""
    if isinstance(architecture, ArchitectureGenome):
        architecture = discretize_genome(architecture)
    return ";".join(encode_layer(layer) for layer in architecture.layers)


def average_depth(population: Sequence):
    """Mean node count rounded half-up, at least 1"""
    if not population:
        raise ArgumentError("Cannot compute the average depth of an empty population")

    depths = [g.depth for g in population]
    mean = Decimal(sum(depths)) / Decimal(len(depths))
    return max(1, int(mean.to_integral_value(rounding=ROUND_HALF_UP)))
