# -*- coding: utf-8 -*-
"""
Comparison algorithms run under the same evaluator, deduplication and
budget accounting as the immune search: uniform random search and a
steady-state genetic algorithm with pairwise tournaments and no crossover.
"""

from __future__ import annotations

from .exceptions import ArgumentError, ConfigurationError
from .genome import NodeGene, discretize, encode_string
from .log import get_logger
from .search import (
    RANDOM,
    Individual,
    SearchResult,
    RunState,
    population_stats,
    select_n_best,
    unique_random_genome,
)

logger = get_logger(__name__)

DEFAULT_DEPTH_RANGE = (3, 12)


def _checkpoint(run, pop, n, trace, generation):
    trace.append(population_stats(generation, select_n_best(pop, n), run.evaluations))


def random_search(space, depth_range, budget, evaluator, rng, cfg):
    """
    Evaluate ``budget`` random genomes with depth uniform on ``depth_range``
    (inclusive) and keep the best ``cfg.population_size``.
    """
    d_min, d_max = depth_range
    if not 1 <= d_min <= d_max:
        raise ArgumentError(f"Invalid depth range {depth_range}")
    n = cfg.population_size
    if budget < n:
        raise ArgumentError(f"Budget {budget} is smaller than the population size {n}")
    if not evaluator.compatible_with(space):
        raise ConfigurationError(f"Evaluator {evaluator.name} cannot evaluate search space {space.name}")

    run = RunState(cfg, space, evaluator)
    pool = []
    trace = []
    generation = 0
    while run.evaluations < budget:
        evaluator.prepare_generation(generation)
        batch = []
        taken = set(run.registry)
        for _ in range(min(n, budget - run.evaluations)):
            depth = int(rng.integers(d_min, d_max + 1))
            genome = unique_random_genome(space, depth, rng, taken, cfg.max_retries)
            if genome is None:
                continue
            individual = Individual(genome=genome, birth_generation=generation, lineage=RANDOM)
            taken.add(individual.encoding)
            batch.append(individual)

        if not batch:
            logger.info("Random search found no novel genome; stopping early")
            break

        pool.extend(run.evaluate(batch, data_seed=generation))
        _checkpoint(run, pool, n, trace, generation)
        generation += 1

    return SearchResult(
        population=select_n_best(pool, n),
        trace=trace,
        registry=sorted(run.registry),
        augmentation_marks=[],
        stop_reason="budget",
        evaluations=run.evaluations,
    )


def tournament(pop, rng):
    """Two distinct individuals drawn uniformly; the higher affinity wins, the first drawn on ties"""
    first, second = rng.choice(len(pop), size=2, replace=False)
    a, b = pop[first], pop[second]
    return a if a.affinity >= b.affinity else b


def mutate_one_gene(genome, rng):
    """Resample one uniformly chosen gene of one uniformly chosen node"""
    space = genome.space
    index = int(rng.integers(genome.depth))
    node = genome.nodes[index]
    genes = list(node.genes())
    slot = int(rng.integers(len(genes)))
    genes[slot] = float(rng.random())

    indegree, second, aggregation, operation = genes[:4]
    hyperparams = tuple(genes[4:])
    new_op = space.operation(discretize(operation, space.operation_names))
    if len(hyperparams) != new_op.arity:
        hyperparams = tuple(float(rng.random()) for _ in range(new_op.arity))

    return genome.with_node(index, NodeGene(indegree, second, aggregation, operation, hyperparams))


def ga_search(space, cfg, evaluator, rng, budget=None):
    """
    Steady-state GA: the winner of a pairwise tournament is cloned, mutated
    in one gene and replaces a uniformly chosen individual.
    """
    budget = cfg.max_evaluations if budget is None else budget
    if budget is None:
        raise ArgumentError("ga_search needs an evaluation budget")
    n = cfg.population_size
    if budget < n:
        raise ArgumentError(f"Budget {budget} is smaller than the population size {n}")
    if not evaluator.compatible_with(space):
        raise ConfigurationError(f"Evaluator {evaluator.name} cannot evaluate search space {space.name}")

    run = RunState(cfg, space, evaluator)
    evaluator.prepare_generation(0)
    pop = run.evaluate(run.random_individuals(n, cfg.initial_depth, rng, 0), data_seed=0)
    trace = []
    _checkpoint(run, pop, n, trace, 0)

    stalls = 0
    while run.evaluations < budget:
        generation = run.evaluations // n
        winner = tournament(pop, rng)

        for _ in range(cfg.max_retries):
            child_genome = mutate_one_gene(winner.genome, rng)
            if encode_string(child_genome) not in run.registry:
                break
        else:
            stalls += 1
            if stalls > 10 * n:
                logger.info("GA found no novel mutation for many tournaments; stopping early")
                break
            continue

        stalls = 0
        if run.evaluations % n == 0:
            evaluator.prepare_generation(generation)
        child = Individual(genome=child_genome, birth_generation=generation,
                           lineage=winner.encoding, inherit=winner.weights)
        run.evaluate([child], data_seed=generation)
        pop[int(rng.integers(len(pop)))] = child

        if run.evaluations % n == 0:
            _checkpoint(run, pop, n, trace, run.evaluations // n)

    return SearchResult(
        population=select_n_best(pop, n),
        trace=trace,
        registry=sorted(run.registry),
        augmentation_marks=[],
        stop_reason="budget",
        evaluations=run.evaluations,
    )
