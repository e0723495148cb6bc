# -*- coding: utf-8 -*-
import math
import unittest

import numpy as np

from immunecs.immunecs.engine.evaluator.surrogate import SurrogateConfig, SurrogateEvaluator, SurrogateLandscape
from immunecs.immunecs.engine.exceptions import ArgumentError, ConfigurationError
from immunecs.immunecs.engine.genome import random_genome
from immunecs.immunecs.engine.search import (
    AUGMENTED,
    ExitDecision,
    GenerationStats,
    Individual,
    SearchConfig,
    augment_population,
    exit_condition,
    search,
    select_n_best,
)

from .helpers import CIFAR, FMNIST, DepthEvaluator, conv, genome, identity, pool, rng


def trace(*means):
    return [
        GenerationStats(generation=g, mean_affinity=m, best_affinity=m, population_depths=[3],
                        distinct_encodings=1, evaluations_so_far=0)
        for g, m in enumerate(means)
    ]


def individual(g, affinity, birth_generation=0):
    return Individual(genome=g, affinity=affinity, birth_generation=birth_generation)


def surrogate(space=FMNIST, seed=0):
    return SurrogateEvaluator(SurrogateLandscape(space, SurrogateConfig(seed=seed)))


def small_config(**overrides):
    settings = dict(population_size=4, initial_depth=2, n_clones=2, n_insertions=1, n_augment=2,
                    patience=2, max_generations=4, seed=3)
    settings.update(overrides)
    return SearchConfig(**settings)


class TestSelection(unittest.TestCase):
    def test_best_affinity_first(self):
        pool_ = [individual(genome(conv()), 0.2), individual(genome(pool()), 0.9), individual(genome(identity()), 0.5)]
        self.assertEqual([i.affinity for i in select_n_best(pool_, 2)], [0.9, 0.5])

    def test_ties(self):
        deep = individual(genome(conv(), conv()), 0.5)
        young = individual(genome(pool()), 0.5, birth_generation=3)
        old = individual(genome(identity()), 0.5, birth_generation=1)
        self.assertEqual(select_n_best([deep, young, old], 3), [old, young, deep])

    def test_errors(self):
        self.assertRaises(ArgumentError, select_n_best, [], 2)
        self.assertRaises(ArgumentError, select_n_best, [Individual(genome=genome(conv()))], 1)


class TestExitCondition(unittest.TestCase):
    def test_stalled_mean_asks_for_augmentation(self):
        self.assertEqual(exit_condition(trace(0.5, 0.503, 0.505), [], 2, 0.0075), ExitDecision.AUGMENT)

    def test_improvement_continues(self):
        self.assertEqual(exit_condition(trace(0.5, 0.52), [], 2, 0.0075), ExitDecision.CONTINUE)
        self.assertEqual(exit_condition(trace(0.5), [], 1, 0.0075), ExitDecision.CONTINUE)

    def test_failed_phases_stop(self):
        self.assertEqual(exit_condition(trace(*[0.5] * 3), [], 2, math.inf), ExitDecision.AUGMENT)
        self.assertEqual(exit_condition(trace(*[0.5] * 5), [2], 2, math.inf), ExitDecision.AUGMENT)
        self.assertEqual(exit_condition(trace(*[0.5] * 7), [2, 4], 2, math.inf), ExitDecision.STOP)

    def test_improving_phase_resets_failures(self):
        self.assertEqual(exit_condition(trace(0.5, 0.5, 0.5), [1], 1, 0.01), ExitDecision.STOP)
        self.assertEqual(exit_condition(trace(0.5, 0.5, 0.6, 0.6), [1], 1, 0.01), ExitDecision.AUGMENT)

    def test_empty_trace(self):
        self.assertRaises(ArgumentError, exit_condition, [], [], 2, 0.01)


class TestAugmentation(unittest.TestCase):
    def test_copies(self):
        parents = [individual(random_genome(CIFAR, 3, rng(s)), 0.4) for s in range(3)]
        parents[0].weights = {"0": "kernel"}
        copies = augment_population(parents, 2, rng(1), generation=5)

        self.assertEqual(len(copies), 6)
        for index, copy in enumerate(copies):
            parent = parents[index // 2]
            self.assertEqual(copy.depth, parent.depth + 1)
            self.assertEqual(copy.genome.nodes[:3], parent.genome.nodes)
            self.assertEqual(copy.lineage, AUGMENTED)
            self.assertEqual(copy.birth_generation, 5)
            self.assertIs(copy.inherit, parent.weights)
            self.assertIsNone(copy.affinity)
        self.assertEqual(len({c.encoding for c in copies}), 6)
        self.assertEqual([p.depth for p in parents], [3, 3, 3])

    def test_invalid_count(self):
        self.assertRaises(ArgumentError, augment_population, [], 0, rng())


class TestSearch(unittest.TestCase):
    def test_population_accounting(self):
        sizes = []
        cfg = SearchConfig(population_size=4, initial_depth=2, n_clones=2, n_insertions=1, n_augment=2,
                           patience=1, tau=math.inf, max_generations=3, seed=1)
        result = search(cfg, FMNIST, DepthEvaluator(), observer=lambda stage, pop: sizes.append((stage, len(pop))))

        self.assertEqual(sizes, [("init", 12), ("selection", 4), ("insertion", 5), ("augmentation", 15),
                                 ("selection", 4), ("insertion", 5)])
        self.assertEqual(result.stop_reason, "patience")
        self.assertEqual(result.augmentation_marks, [1])
        self.assertEqual(result.generations, 2)
        self.assertTrue(result.trace[1].augmented)

    def test_deterministic(self):
        a = search(small_config(), FMNIST, surrogate())
        b = search(small_config(), FMNIST, surrogate())
        self.assertEqual([s.to_dict() for s in a.trace], [s.to_dict() for s in b.trace])
        self.assertEqual([i.encoding for i in a.population], [i.encoding for i in b.population])

    def test_invariants(self):
        evaluator = surrogate(CIFAR)
        result = search(small_config(max_generations=6), CIFAR, evaluator)

        self.assertEqual(len(result.population), 4)
        self.assertEqual(result.evaluations, evaluator.calls)
        self.assertEqual(len(result.registry), result.evaluations)
        self.assertTrue({i.encoding for i in result.population} <= set(result.registry))
        means = [s.mean_affinity for s in result.trace]
        self.assertTrue(all(b >= a for a, b in zip(means, means[1:])))
        for stats in result.trace:
            self.assertLessEqual(stats.mean_affinity, stats.best_affinity)
        self.assertAlmostEqual(result.final_mean_affinity, np.mean([i.affinity for i in result.population]))

    def test_evaluation_budget(self):
        result = search(small_config(max_evaluations=4), FMNIST, surrogate())
        self.assertEqual(result.stop_reason, "max_evaluations")
        self.assertEqual(result.generations, 0)
        self.assertEqual(result.evaluations, 12)

    def test_incompatible_evaluator(self):
        self.assertRaises(ConfigurationError, search, small_config(), CIFAR, surrogate(FMNIST))


class TestSearchConfig(unittest.TestCase):
    def test_presets(self):
        cfg = SearchConfig.from_preset("cifar", seed=4)
        self.assertEqual((cfg.n_augment, cfg.n_insertions, cfg.tau, cfg.seed), (5, 1, 0.005, 4))
        self.assertEqual(cfg.mutation.operation_gene_sigma_scale, 0.5)
        self.assertRaises(ConfigurationError, SearchConfig.from_preset, "imagenet")

    def test_infinite_tau_round_trip(self):
        cfg = SearchConfig(tau=math.inf)
        self.assertEqual(cfg.to_dict()["tau"], "inf")
        self.assertEqual(SearchConfig.from_dict(cfg.to_dict()), cfg)

    def test_validation(self):
        self.assertRaises(ConfigurationError, SearchConfig, population_size=1)
        self.assertRaises(ConfigurationError, SearchConfig, rho=0.0)
        self.assertRaises(ConfigurationError, SearchConfig, population_size=8, max_evaluations=4)
        self.assertRaises(ConfigurationError, SearchConfig.from_dict, {"generations": 3})
