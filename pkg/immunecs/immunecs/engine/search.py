# -*- coding: utf-8 -*-
"""
The immune search loop.

Random initial networks are grown by augmentation, then every generation
each individual is cloned and mutated, the best N of parents and clones
survive, and a few random networks are inserted at the population's average
depth. When the mean affinity stalls for ``patience`` generations every
individual gets augmented copies with one extra layer; when ``patience``
augmentation phases in a row fail to improve the mean, the search stops.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Callable, List, Optional

import numpy as np

from .evaluator.base import EvaluationJob, evaluate_all
from .exceptions import ArgumentError, ConfigurationError
from .genome import average_depth, encode_string, random_genome, random_node
from .log import get_logger
from .mutation import MutationConfig, clone_and_mutate_unique

logger = get_logger(__name__)

SEARCH_PRESETS = {
    "fmnist": {
        "population_size": 12, "initial_depth": 3, "rho": 0.2, "n_clones": 3, "n_augment": 3,
        "n_insertions": 2, "patience": 2, "tau": 0.0075, "max_generations": 20,
    },
    "cifar": {
        "population_size": 12, "initial_depth": 3, "rho": 0.2, "n_clones": 3, "n_augment": 5,
        "n_insertions": 1, "patience": 2, "tau": 0.005, "max_generations": 20,
        "operation_gene_sigma_scale": 0.5,
    },
}


@dataclass(frozen=True)
class SearchConfig:
    population_size: int = 12
    initial_depth: int = 3
    rho: float = 0.2
    n_clones: int = 3
    n_insertions: int = 2
    n_augment: int = 3
    patience: int = 2
    tau: float = 0.0075
    max_generations: int = 20
    seed: int = 0
    max_evaluations: Optional[int] = None
    operation_gene_sigma_scale: float = 1.0
    max_retries: int = 20
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.population_size < 2:
            raise ConfigurationError("population_size must be at least 2")
        if self.initial_depth < 1:
            raise ConfigurationError("initial_depth must be at least 1")
        if self.n_clones < 1:
            raise ConfigurationError("n_clones must be at least 1")
        if self.n_augment < 1:
            raise ConfigurationError("n_augment must be at least 1")
        if self.n_insertions < 0:
            raise ConfigurationError("n_insertions must not be negative")
        if self.patience < 1:
            raise ConfigurationError("patience must be at least 1")
        if not self.tau > 0:
            raise ConfigurationError("tau must be positive")
        if self.max_generations < 1:
            raise ConfigurationError("max_generations must be at least 1")
        if self.max_evaluations is not None and self.max_evaluations < self.population_size:
            raise ConfigurationError("max_evaluations must be at least population_size")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        # rho, sigma scale and retries are checked by MutationConfig
        self.mutation.validate()

    @property
    def mutation(self):
        return MutationConfig(rho=self.rho, operation_gene_sigma_scale=self.operation_gene_sigma_scale,
                              max_retries=self.max_retries)

    def to_dict(self):
        data = asdict(self)
        if math.isinf(self.tau):
            data["tau"] = "inf"
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        preset = data.pop("preset", None)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"Unknown search settings: {sorted(unknown)}")
        if data.get("tau") == "inf":
            data["tau"] = math.inf
        if preset is not None:
            return cls.from_preset(preset, **data)
        return cls(**data)

    @classmethod
    def from_preset(cls, name, **overrides):
        if name not in SEARCH_PRESETS:
            raise ConfigurationError(f"Unknown search preset {name!r}; expected one of {sorted(SEARCH_PRESETS)}")
        return cls(**{**SEARCH_PRESETS[name], **overrides})


RANDOM = "random"
AUGMENTED = "augmented"


@dataclass
class Individual:
    genome: Any
    affinity: Optional[float] = None
    weights: Optional[Any] = None
    birth_generation: int = 0
    lineage: str = RANDOM
    inherit: Optional[Any] = field(default=None, repr=False, compare=False)
    encoding: str = field(init=False)

    def __post_init__(self):
        self.encoding = encode_string(self.genome)

    @property
    def depth(self):
        return self.genome.depth

    @property
    def evaluated(self):
        return self.affinity is not None

    def to_dict(self):
        return {
            "encoding": self.encoding,
            "affinity": self.affinity,
            "depth": self.depth,
            "birth_generation": self.birth_generation,
            "lineage": self.lineage,
            "genome": self.genome.to_dict(),
        }


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    mean_affinity: float
    best_affinity: float
    population_depths: List[int]
    distinct_encodings: int
    evaluations_so_far: int
    augmented: bool = False

    def to_dict(self):
        return asdict(self)


class ExitDecision(str, Enum):
    CONTINUE = "continue"
    AUGMENT = "augment"
    STOP = "stop"


@dataclass
class SearchResult:
    population: List[Individual]
    trace: List[GenerationStats]
    registry: List[str]
    augmentation_marks: List[int]
    stop_reason: str
    evaluations: int

    @property
    def generations(self):
        return self.trace[-1].generation if self.trace else 0

    @property
    def final_mean_affinity(self):
        return float(np.mean([i.affinity for i in self.population]))


def _rank_key(individual):
    return (-individual.affinity, individual.depth, individual.birth_generation, individual.encoding)


def select_n_best(pool, n):
    """Top ``n`` by affinity; ties go to shallower, then older, then lexicographically smaller encodings"""
    if not pool:
        raise ArgumentError("Cannot select from an empty pool")
    if any(not individual.evaluated for individual in pool):
        raise ArgumentError("Every individual must be evaluated before selection")
    return sorted(pool, key=_rank_key)[:n]


def population_stats(generation, selected, evaluations, augmented=False):
    affinities = [i.affinity for i in selected]
    best = float(max(affinities))
    return GenerationStats(
        generation=generation,
        mean_affinity=min(best, float(np.mean(affinities))),
        best_affinity=best,
        population_depths=[i.depth for i in selected],
        distinct_encodings=len({i.encoding for i in selected}),
        evaluations_so_far=evaluations,
        augmented=augmented,
    )


def unique_random_genome(space, depth, rng, taken, max_retries=20):
    """Random genome whose encoding is not in ``taken``, or None after ``max_retries`` draws"""
    for _ in range(max_retries):
        genome = random_genome(space, depth, rng)
        if encode_string(genome) not in taken:
            return genome
    return None


def augment_population(pop, n_a, rng, registry=None, generation=0, max_retries=20):
    """
    ``n_a`` copies of every individual with one random node appended. Copies
    keep the parent's genes unchanged, inherit its weights for every old node
    and start the new node fresh. Originals are not touched.
    """
    if n_a < 1:
        raise ArgumentError(f"n_a must be at least 1, got {n_a}")

    taken = set(registry or ())
    copies = []
    for parent in pop:
        position = parent.depth + 1
        for _ in range(n_a):
            for _ in range(max_retries):
                genome = parent.genome.appended(random_node(parent.genome.space, position, rng))
                encoding = encode_string(genome)
                if encoding not in taken:
                    break
            else:
                logger.info(f"Dropped augmented copy of {parent.encoding}: no novel layer after {max_retries} draws")
                continue

            taken.add(encoding)
            copies.append(Individual(genome=genome, birth_generation=generation,
                                     lineage=AUGMENTED, inherit=parent.weights))
    return copies


def exit_condition(trace, augmentation_marks, pi, tau):
    """
    Replay the trace. The reference mean starts at the first entry and moves
    only on an improvement of more than ``tau``; ``pi`` stale generations
    since the last augmentation ask for an augmentation. An augmentation phase
    fails when its best mean does not exceed the mean before it by more than
    ``tau``; ``pi`` failed phases in a row stop the search.
    """
    if not trace:
        raise ArgumentError("exit_condition needs a non-empty trace")

    marks = set(augmentation_marks)
    anchor = trace[0].mean_affinity
    stale = 0
    failed = 0
    phase_reference = None
    phase_best = -math.inf

    for stats in trace[1:]:
        mean = stats.mean_affinity
        if mean > anchor + tau:
            anchor = mean
            stale = 0
        else:
            stale += 1

        if phase_reference is not None:
            phase_best = max(phase_best, mean)

        if stats.generation in marks:
            if phase_reference is not None:
                failed = failed + 1 if phase_best <= phase_reference + tau else 0
            phase_reference = anchor
            phase_best = -math.inf
            stale = 0

    if stale < pi:
        return ExitDecision.CONTINUE

    prospective = failed
    if phase_reference is not None:
        prospective = failed + 1 if phase_best <= phase_reference + tau else 0

    return ExitDecision.STOP if prospective >= pi else ExitDecision.AUGMENT


class RunState:
    """Mutable state of one search: registry, evaluation count and population"""

    def __init__(self, cfg, space, evaluator, journal=None):
        self.cfg = cfg
        self.space = space
        self.evaluator = evaluator
        self.journal = journal
        self.registry = set()
        self.evaluations = 0

    def evaluate(self, individuals, data_seed):
        for individual in individuals:
            self.registry.add(individual.encoding)

        jobs = [EvaluationJob(i.genome, inherited=i.inherit, data_seed=data_seed) for i in individuals]
        results = evaluate_all(self.evaluator, jobs, workers=self.cfg.workers)
        for individual, result in zip(individuals, results):
            individual.affinity = result.affinity
            individual.weights = result.weights
            individual.inherit = None
        self.evaluations += len(individuals)
        return individuals

    def random_individuals(self, count, depth, rng, generation):
        taken = set(self.registry)
        individuals = []
        for _ in range(count):
            genome = unique_random_genome(self.space, depth, rng, taken, self.cfg.max_retries)
            if genome is None:
                logger.info(f"Dropped random insertion at depth {depth}: no novel genome")
                continue
            individual = Individual(genome=genome, birth_generation=generation, lineage=RANDOM)
            taken.add(individual.encoding)
            individuals.append(individual)
        return individuals

    def clones(self, pop, generation):
        clones = []
        for index, parent in enumerate(pop):
            rng = np.random.default_rng([self.cfg.seed, generation, index])
            taken = self.registry | {c.encoding for c in clones}
            genomes = clone_and_mutate_unique(parent, self.cfg.n_clones, taken, self.cfg.mutation, rng, self.journal)
            clones.extend(
                Individual(genome=g, birth_generation=generation, lineage=parent.encoding, inherit=parent.weights)
                for g in genomes
            )
        return clones

    def augment(self, pop, rng, generation):
        copies = augment_population(pop, self.cfg.n_augment, rng, self.registry, generation, self.cfg.max_retries)
        return self.evaluate(copies, data_seed=generation)

    def budget_spent(self):
        return self.cfg.max_evaluations is not None and self.evaluations >= self.cfg.max_evaluations


def search(cfg: SearchConfig, space, evaluator, observer: Optional[Callable] = None, journal=None) -> SearchResult:
    """
    Run the immune search. ``observer(stage, population)`` is called after
    initialization, selection, insertion and every augmentation.
    """
    if not evaluator.compatible_with(space):
        raise ConfigurationError(f"Evaluator {evaluator.name} cannot evaluate search space {space.name}")

    notify = observer or (lambda stage, population: None)
    rng = np.random.default_rng(cfg.seed)
    run = RunState(cfg, space, evaluator, journal)
    n = cfg.population_size

    evaluator.prepare_generation(0)
    parents = run.evaluate(run.random_individuals(n, cfg.initial_depth, rng, 0), data_seed=0)
    pop = parents + run.augment(parents, rng, 0)
    notify("init", pop)

    trace = [population_stats(0, select_n_best(pop, n), run.evaluations)]
    marks: List[int] = []
    stop_reason = "max_generations"
    logger.info(f"Initialized {len(pop)} individuals, mean affinity {trace[0].mean_affinity:.4f}")

    for generation in range(1, cfg.max_generations + 1):
        if run.budget_spent():
            stop_reason = "max_evaluations"
            break

        evaluator.prepare_generation(generation)
        clones = run.evaluate(run.clones(pop, generation), data_seed=generation)

        pop = select_n_best(pop + clones, n)
        notify("selection", pop)
        selected = list(pop)

        insertions = run.random_individuals(cfg.n_insertions, average_depth(pop), rng, generation)
        pop = pop + run.evaluate(insertions, data_seed=generation)
        notify("insertion", pop)

        stats = population_stats(generation, selected, run.evaluations)
        trace.append(stats)
        logger.info(
            f"Generation {generation}: mean {stats.mean_affinity:.4f}, best {stats.best_affinity:.4f}, "
            f"{run.evaluations} evaluations"
        )

        decision = exit_condition(trace, marks, cfg.patience, cfg.tau)
        if decision is ExitDecision.STOP:
            stop_reason = "patience"
            logger.info(f"Stopping after generation {generation}: {cfg.patience} augmentation phases without improvement")
            break

        if decision is ExitDecision.AUGMENT:
            pop = pop + run.augment(pop, rng, generation)
            marks.append(generation)
            trace[-1] = GenerationStats(**{**stats.to_dict(), "augmented": True})
            notify("augmentation", pop)
            logger.info(f"Augmented population after generation {generation}: {len(pop)} individuals")

    final = select_n_best(pop, n)
    return SearchResult(
        population=final,
        trace=trace,
        registry=sorted(run.registry),
        augmentation_marks=marks,
        stop_reason=stop_reason,
        evaluations=run.evaluations,
    )
