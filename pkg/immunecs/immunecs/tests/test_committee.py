# -*- coding: utf-8 -*-
import unittest

import numpy as np

from immunecs.immunecs.engine.committee import (
    Committee,
    CommitteeConfig,
    build_committee,
    combine,
    disagreement_matrix,
    ensemble_metrics,
    predict,
    retained_count,
    soft_vote,
)
from immunecs.immunecs.engine.exceptions import ArgumentError, ConfigurationError
from immunecs.immunecs.engine.genome import random_genome
from immunecs.immunecs.engine.search import Individual

from .helpers import FMNIST, rng


def population(*affinities):
    return [Individual(genome=random_genome(FMNIST, 3, rng(i)), affinity=a) for i, a in enumerate(affinities)]


def crafted_probabilities():
    """Three members over six two-class samples; member i errs on samples 2i and 2i+1"""
    labels = np.array([0, 1, 0, 1, 0, 1])
    probabilities = np.zeros((3, 6, 2))
    for member in range(3):
        for sample, label in enumerate(labels):
            right = 0.1 if sample // 2 == member else 0.9
            probabilities[member, sample, label] = right
            probabilities[member, sample, 1 - label] = 1.0 - right
    return probabilities, labels


class TestBuildCommittee(unittest.TestCase):
    def test_retain_all(self):
        committee = build_committee(population(*np.linspace(0.1, 0.9, 12)))
        self.assertEqual(committee.size, 12)
        self.assertAlmostEqual(committee.normalized_weights.sum(), 1.0, places=12)

    def test_retain_top_third(self):
        pop = population(*np.linspace(0.1, 0.9, 12))
        committee = build_committee(pop, retain=1 / 3)
        self.assertEqual(committee.size, 4)
        self.assertEqual([m.affinity for m in committee.members], sorted((i.affinity for i in pop), reverse=True)[:4])
        self.assertEqual(committee.weights, tuple(m.affinity for m in committee.members))

    def test_zero_affinity_is_floored(self):
        committee = build_committee(population(0.0, 0.5))
        self.assertTrue(all(w > 0 for w in committee.weights))

    def test_retained_count(self):
        self.assertEqual(retained_count(12, "all"), 12)
        self.assertEqual(retained_count(12, 1 / 3), 4)
        self.assertEqual(retained_count(2, 0.1), 1)

    def test_errors(self):
        self.assertRaises(ArgumentError, build_committee, [])
        self.assertRaises(ArgumentError, Committee, (1, 2), (1.0,))
        self.assertRaises(ArgumentError, Committee, (1,), (0.0,))
        self.assertRaises(ConfigurationError, CommitteeConfig, retain=1.5)
        self.assertRaises(ConfigurationError, CommitteeConfig, weight_source="loss")


class TestSoftVote(unittest.TestCase):
    def test_weighted_vote(self):
        committee = Committee(members=("a", "b"), weights=(0.9, 0.45))
        np.testing.assert_allclose(committee.normalized_weights, [2 / 3, 1 / 3])
        np.testing.assert_allclose(combine(committee, [[1, 0], [0, 1]]), [2 / 3, 1 / 3])
        self.assertEqual(soft_vote(committee, [[1, 0], [0, 1]]), 0)

    def test_equal_weights_average(self):
        committee = Committee(members=(0, 1, 2), weights=(0.5, 0.5, 0.5))
        vectors = [[0.2, 0.8], [0.6, 0.4], [0.7, 0.3]]
        np.testing.assert_allclose(combine(committee, vectors), np.mean(vectors, axis=0))

    def test_unanimous_members_win_regardless_of_weights(self):
        committee = Committee(members=(0, 1), weights=(1e-6, 10.0))
        self.assertEqual(soft_vote(committee, [[0.1, 0.2, 0.7], [0.3, 0.3, 0.4]]), 2)

    def test_tie_goes_to_lowest_class(self):
        committee = Committee(members=(0,), weights=(1.0,))
        self.assertEqual(soft_vote(committee, [[0.4, 0.4, 0.2]]), 0)

    def test_single_member_matches_its_prediction(self):
        probabilities, _ = crafted_probabilities()
        committee = Committee(members=(0,), weights=(0.3,))
        np.testing.assert_array_equal(predict(committee, probabilities[:1]), probabilities[0].argmax(axis=1))

    def test_invalid_vectors(self):
        committee = Committee(members=(0, 1), weights=(1.0, 1.0))
        self.assertRaises(ArgumentError, soft_vote, committee, [[0.5, 0.5], [1.0]])
        self.assertRaises(ArgumentError, soft_vote, committee, [[0.5, 0.6], [0.5, 0.5]])
        self.assertRaises(ArgumentError, soft_vote, committee, [[0.5, 0.5]])

    def test_empty_vote(self):
        self.assertRaises(ArgumentError, soft_vote, Committee(members=(0,), weights=(1.0,)), [])


class TestEnsembleMetrics(unittest.TestCase):
    def test_disjoint_errors_are_outvoted(self):
        probabilities, labels = crafted_probabilities()
        committee = Committee(members=(0, 1, 2), weights=(1.0, 1.0, 1.0))
        report = ensemble_metrics(committee, probabilities, labels)

        self.assertEqual(report.committee_accuracy, 1.0)
        np.testing.assert_allclose(report.member_accuracies, [2 / 3] * 3)
        self.assertAlmostEqual(report.ensemble_gain, 1 / 3)
        self.assertEqual(report.member_encodings, ["0", "1", "2"])
        np.testing.assert_allclose(report.disagreement, [[0, 2 / 3, 2 / 3], [2 / 3, 0, 2 / 3], [2 / 3, 2 / 3, 0]])

    def test_identical_members(self):
        probabilities, labels = crafted_probabilities()
        same = np.stack([probabilities[0]] * 3)
        report = ensemble_metrics(Committee(members=(0, 1, 2), weights=(0.2, 0.3, 0.5)), same, labels)
        self.assertEqual(report.ensemble_gain, 0.0)
        self.assertEqual(np.asarray(report.disagreement).sum(), 0.0)

    def test_single_member_gain(self):
        probabilities, labels = crafted_probabilities()
        report = ensemble_metrics(Committee(members=(0,), weights=(1.0,)), probabilities[:1], labels)
        self.assertEqual(report.ensemble_gain, 0.0)
        self.assertEqual(report.to_dict()["weights"], [1.0])

    def test_disagreement_matrix(self):
        np.testing.assert_allclose(disagreement_matrix([[0, 1], [0, 0]]), [[0, 0.5], [0.5, 0]])

    def test_shape_check(self):
        probabilities, labels = crafted_probabilities()
        self.assertRaises(ArgumentError, ensemble_metrics, Committee((0, 1, 2), (1, 1, 1)), probabilities, labels[:3])
