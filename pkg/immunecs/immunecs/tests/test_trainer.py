# -*- coding: utf-8 -*-
import math
import os
import unittest

import numpy as np

from immunecs.immunecs.engine.evaluator.base import EvaluationJob, evaluate_all
from immunecs.immunecs.engine.evaluator.neural import (
    DataSplit,
    FullTrainConfig,
    NeuralEvaluator,
    TrainConfig,
    WeightStore,
    full_train,
    make_procedural_dataset,
    make_split,
    partial_evaluate,
)
from immunecs.immunecs.engine.evaluator.neural.layers import Dense
from immunecs.immunecs.engine.evaluator.neural.trainer import Adam, cosine_learning_rate
from immunecs.immunecs.engine.exceptions import ConfigurationError, EvaluationError
from immunecs.immunecs.engine.genome import discretize_genome, random_genome

from .helpers import (
    CIFAR,
    FMNIST,
    conv,
    genome,
    identity,
    pool,
    rng,
    tiny_dataset_config,
    tiny_network_config,
    tiny_train_config,
)


def dataset():
    return make_procedural_dataset(tiny_dataset_config())


def split_of(data, seed=0):
    return make_split(data, seed=[seed, 0], subset_fraction=0.5, validation_fraction=0.3)


class TestSchedule(unittest.TestCase):
    def test_cosine_cycle(self):
        self.assertEqual(cosine_learning_rate(0.1, 0.0, 10), 0.1)
        self.assertAlmostEqual(cosine_learning_rate(0.1, 5.0, 10), 0.05)
        self.assertEqual(cosine_learning_rate(0.1, 10.0, 10), 0.0)

    def test_restarts(self):
        self.assertAlmostEqual(cosine_learning_rate(0.1, 2.5, 10, restarts=(5,)), 0.05)
        self.assertEqual(cosine_learning_rate(0.1, 5.0, 10, restarts=(5,)), 0.1)
        self.assertAlmostEqual(cosine_learning_rate(0.1, 7.5, 10, restarts=(5,)), 0.05)

    def test_constant_rate(self):
        self.assertEqual(cosine_learning_rate(0.1, 7.0, 10, annealing=False), 0.1)


class TestAdam(unittest.TestCase):
    def test_first_step_moves_by_learning_rate(self):
        dense = Dense(3, 2, rng(1), np.float64)
        before = dense.params["weight"].copy()
        dense.grads["weight"] = np.sign(rng(2).standard_normal((2, 3)))
        dense.grads["bias"] = np.zeros(2)

        Adam(dense.parameters()).step(0.01)
        np.testing.assert_allclose(before - dense.params["weight"], 0.01 * dense.grads["weight"], rtol=1e-5)
        np.testing.assert_array_equal(dense.params["bias"], np.zeros(2))


class TestConfigs(unittest.TestCase):
    def test_train_config(self):
        self.assertRaises(ConfigurationError, TrainConfig, subset_fraction=0.0)
        self.assertRaises(ConfigurationError, TrainConfig, max_epochs=2, restarts=(3,))
        self.assertRaises(ConfigurationError, TrainConfig, max_epochs=10, restarts=(6, 4))
        self.assertEqual(TrainConfig.from_dict(TrainConfig(restarts=(5,)).to_dict()), TrainConfig(restarts=(5,)))

    def test_full_train_config(self):
        self.assertRaises(ConfigurationError, FullTrainConfig, epochs=10, restarts=(25,))
        self.assertEqual(FullTrainConfig(epochs=0).epochs, 0)
        self.assertRaises(ConfigurationError, FullTrainConfig.from_dict, {"epoch": 3})


class TestPartialEvaluation(unittest.TestCase):
    def test_affinity_and_weights(self):
        data = dataset()
        g = genome(conv(), pool(), identity())
        result = partial_evaluate(g, None, split_of(data), 3, tiny_train_config(), tiny_network_config(), seed=1)

        self.assertFalse(result.failed)
        self.assertTrue(0.0 <= result.affinity <= 1.0)
        self.assertIn(result.epochs, (1, 2))
        self.assertIsInstance(result.weights, WeightStore)
        self.assertEqual(result.weights.architecture, discretize_genome(g))

    def test_deterministic(self):
        data = dataset()
        g = genome(conv(), pool())
        a = partial_evaluate(g, None, split_of(data), 3, tiny_train_config(), tiny_network_config(), seed=2)
        b = partial_evaluate(g, None, split_of(data), 3, tiny_train_config(), tiny_network_config(), seed=2)
        self.assertEqual(a.affinity, b.affinity)
        np.testing.assert_array_equal(a.weights.groups["head"]["dense.weight"], b.weights.groups["head"]["dense.weight"])

    def test_early_stopping(self):
        data = dataset()
        cfg = tiny_train_config(max_epochs=5, early_stop_patience=1, early_stop_threshold=1.0)
        result = partial_evaluate(genome(conv()), None, split_of(data), 3, cfg, tiny_network_config())
        self.assertLessEqual(result.epochs, 2)

    def test_inherited_weights(self):
        data = dataset()
        parent = genome(conv(), pool())
        first = partial_evaluate(parent, None, split_of(data), 3, tiny_train_config(), tiny_network_config())
        child = genome(conv(), pool(), identity())
        second = partial_evaluate(child, first.weights, split_of(data, 1), 3, tiny_train_config(),
                                  tiny_network_config())
        self.assertFalse(second.failed)
        self.assertEqual(second.weights.architecture.depth, 3)

    def test_non_finite_loss_fails_the_evaluation(self):
        images = np.full((20, 1, 8, 8), np.nan, dtype=np.float32)
        labels = np.arange(20) % 3
        split = DataSplit(images, labels, images[:6], labels[:6])
        result = partial_evaluate(genome(conv()), None, split, 3, tiny_train_config(), tiny_network_config())

        self.assertTrue(result.failed)
        self.assertEqual(result.affinity, 0.0)


class TestFullTraining(unittest.TestCase):
    def test_zero_epochs_reproduce_partial_accuracy(self):
        data = dataset()
        split = split_of(data)
        g = genome(conv(), pool(multiplier=0.9))
        partial = partial_evaluate(g, None, split, 3, tiny_train_config(), tiny_network_config(), seed=3)

        result = full_train(g, partial.weights, data, split, FullTrainConfig(epochs=0, restarts=()),
                            tiny_train_config(), tiny_network_config(), seed=3)
        self.assertEqual(result.validation_accuracy, partial.affinity)
        self.assertEqual(result.epochs, 0)
        self.assertTrue(0.0 <= result.test_accuracy <= 1.0)

    def test_continued_training(self):
        data = dataset()
        split = make_split(data, seed=[0, 0], subset_fraction=1.0, validation_fraction=0.3)
        g = genome(conv())
        partial = partial_evaluate(g, None, split, 3, tiny_train_config(), tiny_network_config())

        result = full_train(g, partial.weights, data, split, FullTrainConfig(epochs=2, restarts=(1,)),
                            tiny_train_config(), tiny_network_config())
        self.assertEqual(result.epochs, 2)
        self.assertFalse(np.array_equal(result.weights.groups["head"]["dense.weight"],
                                        partial.weights.groups["head"]["dense.weight"]))


class TestNeuralEvaluator(unittest.TestCase):
    def evaluator(self):
        return NeuralEvaluator(dataset(), tiny_train_config(), tiny_network_config(), seed=4)

    def test_compatibility(self):
        evaluator = self.evaluator()
        self.assertTrue(evaluator.compatible_with(FMNIST))
        self.assertFalse(evaluator.compatible_with(CIFAR))
        self.assertRaises(EvaluationError, evaluator.evaluate, random_genome(CIFAR, 2, rng()))

    def test_generation_split(self):
        evaluator = self.evaluator()
        first = evaluator.split.validation_labels.copy()
        first_images = evaluator.split.validation_images.copy()
        evaluator.prepare_generation(3)
        self.assertEqual(evaluator.generation, 3)
        self.assertEqual(len(evaluator.split.validation_labels), len(first))
        self.assertFalse(np.array_equal(evaluator.split.validation_images, first_images))

    def test_evaluate_and_predict(self):
        evaluator = self.evaluator()
        g = genome(conv(), pool())
        result, = evaluate_all(evaluator, [EvaluationJob(g)])
        self.assertFalse(result.failed)
        self.assertTrue(math.isfinite(result.affinity))

        probabilities = evaluator.predict_proba(g, result.weights, evaluator.dataset.test_images)
        self.assertEqual(probabilities.shape, (30, 3))
        np.testing.assert_allclose(probabilities.sum(axis=1), 1.0, rtol=1e-5)


@unittest.skipUnless(os.environ.get("IMMUNECS_SLOW_TESTS"), "trains networks; set IMMUNECS_SLOW_TESTS=1")
class TestPairedTrials(unittest.TestCase):
    def setUp(self):
        self.data = make_procedural_dataset(tiny_dataset_config(train_size=300, test_size=60))
        self.network_cfg = tiny_network_config()

    def test_inherited_weights_beat_fresh_start(self):
        one_epoch = tiny_train_config(max_epochs=1)
        wins = 0
        for trial in range(10):
            g = random_genome(FMNIST, 3, rng(trial))
            split = split_of(self.data, trial)
            parent = partial_evaluate(g, None, split, 3, tiny_train_config(max_epochs=4),
                                      self.network_cfg, seed=trial)
            inherited = partial_evaluate(g, parent.weights, split, 3, one_epoch, self.network_cfg, seed=trial)
            fresh = partial_evaluate(g, None, split, 3, one_epoch, self.network_cfg, seed=trial)
            wins += inherited.affinity >= fresh.affinity
        self.assertGreaterEqual(wins, 8)

    def test_full_training_beats_partial_affinity(self):
        partial_cfg = tiny_train_config(max_epochs=3)
        wins = 0
        for trial in range(10):
            g = random_genome(FMNIST, 3, rng(100 + trial))
            split = make_split(self.data, seed=[trial, 0], subset_fraction=0.2, validation_fraction=0.3)
            full_split = make_split(self.data, seed=[trial, 0], subset_fraction=1.0, validation_fraction=0.3)
            partial = partial_evaluate(g, None, split, 3, partial_cfg, self.network_cfg, seed=trial)
            result = full_train(g, partial.weights, self.data, full_split, FullTrainConfig(epochs=8, restarts=()),
                                partial_cfg, self.network_cfg, seed=trial)
            wins += result.validation_accuracy >= partial.affinity
        self.assertGreaterEqual(wins, 8)
