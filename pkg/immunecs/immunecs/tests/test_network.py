# -*- coding: utf-8 -*-
import unittest

import numpy as np

from immunecs.immunecs.engine.evaluator.neural.network import (
    HEAD,
    STEM,
    LayerShape,
    NetworkConfig,
    decode_and_build,
    infer_channels,
    infer_shapes,
    widened_channels,
)
from immunecs.immunecs.engine.exceptions import ConfigurationError, EvaluationError
from immunecs.immunecs.engine.genome import DiscreteArchitecture, LayerSpec, discretize_genome

from .helpers import conv, dsep, genome, identity, pool, rng
from .test_layers import numeric_gradient, relative_error


def architecture():
    return discretize_genome(genome(conv(), pool(multiplier=0.9), dsep(), identity()))


class TestShapes(unittest.TestCase):
    def test_widened_channels(self):
        self.assertEqual(widened_channels(64, 2.0), 128)
        self.assertEqual(widened_channels(3, 4.0 / 3.0), 4)
        self.assertEqual(widened_channels(3, 5.0 / 3.0), 5)
        self.assertEqual(widened_channels(1, 1.0), 1)

    def test_infer_shapes(self):
        shapes = infer_shapes(architecture(), 4, (8, 8))
        self.assertEqual(shapes, [
            LayerShape(4, 4, (8, 8), (8, 8)),
            LayerShape(4, 8, (8, 8), (4, 4)),
            LayerShape(8, 8, (4, 4), (4, 4)),
            LayerShape(8, 8, (4, 4), (4, 4)),
        ])
        self.assertEqual(infer_channels(architecture(), 4), {1: 4, 2: 4, 3: 8, 4: 8, "out": 8})

    def test_pooling_down_to_one_pixel(self):
        arch = discretize_genome(genome(*[pool()] * 6))
        sizes = [shape.out_size for shape in infer_shapes(arch, 2, (8, 8))]
        self.assertEqual(sizes, [(4, 4), (2, 2), (1, 1), (1, 1), (1, 1), (1, 1)])

    def test_undecodable_layers(self):
        block = DiscreteArchitecture(layers=(LayerSpec("ResNetBlock", (3, True), (0,)),))
        skip = DiscreteArchitecture(layers=(LayerSpec("Identity", (), (0,)),
                                            LayerSpec("Identity", (), (1, 0), "Add")))
        for arch in (block, skip):
            self.assertRaises(EvaluationError, infer_shapes, arch, 4, (8, 8))
            self.assertRaises(EvaluationError, decode_and_build, arch, (1, 8, 8), 3)

    def test_config_validation(self):
        self.assertRaises(ConfigurationError, NetworkConfig, base_width=0)
        self.assertRaises(ConfigurationError, NetworkConfig, dropout=1.0)
        self.assertRaises(ConfigurationError, NetworkConfig, dtype="float16")


class TestNetwork(unittest.TestCase):
    def build(self, seed=0, **overrides):
        settings = dict(base_width=4, dropout=0.0)
        settings.update(overrides)
        return decode_and_build(architecture(), (1, 8, 8), 3, NetworkConfig(**settings), rng(seed))

    def test_forward_and_probabilities(self):
        network = self.build()
        images = rng(1).standard_normal((5, 1, 8, 8)).astype(np.float32)

        logits = network.forward(images)
        probabilities = network.predict_proba(images, batch_size=2)
        self.assertEqual(logits.shape, (5, 3))
        self.assertEqual(logits.dtype, np.float32)
        np.testing.assert_allclose(probabilities.sum(axis=1), 1.0, rtol=1e-5)

    def test_groups(self):
        network = self.build()
        state = network.state()
        self.assertEqual(list(state), [STEM, 1, 2, 3, 4, HEAD])
        self.assertEqual(sorted(state[1]), ["bn.beta", "bn.gamma", "bn.running_mean", "bn.running_var",
                                            "conv.bias", "conv.weight"])
        self.assertIn("project.weight", state[2])
        self.assertEqual(state[4], {})

    def test_state_round_trip(self):
        source, target = self.build(seed=1), self.build(seed=2)
        images = rng(3).standard_normal((4, 1, 8, 8)).astype(np.float32)
        self.assertFalse(np.allclose(source.forward(images), target.forward(images)))

        target.load_state(source.state())
        np.testing.assert_array_equal(source.forward(images), target.forward(images))

    def test_state_is_a_copy(self):
        network = self.build()
        state = network.state()
        state[STEM]["conv.weight"] += 1.0
        self.assertFalse(np.array_equal(state[STEM]["conv.weight"], network.state()[STEM]["conv.weight"]))

    def test_load_state_errors(self):
        network = self.build()
        wider = self.build(base_width=6)
        self.assertRaises(EvaluationError, network.load_state, wider.state())
        self.assertRaises(EvaluationError, network.load_state, {9: {}})

    def test_backward_matches_finite_differences(self):
        network = self.build(seed=4, base_width=3, dtype="float64")
        generator = rng(5)
        images = generator.standard_normal((4, 1, 8, 8))
        weights = generator.standard_normal((4, 3))

        network.forward(images, training=True)
        dx = network.backward(weights)
        stem_grad = network.stem[0][1].grads["weight"].copy()
        dense = network.head[-1][1]
        dense_grad = dense.grads["weight"].copy()

        def loss():
            return float((network.forward(images, training=True) * weights).sum())

        self.assertLess(relative_error(dx, numeric_gradient(loss, images)), 1e-4)
        self.assertLess(relative_error(stem_grad, numeric_gradient(loss, network.stem[0][1].params["weight"])), 1e-4)
        self.assertLess(relative_error(dense_grad, numeric_gradient(loss, dense.params["weight"])), 1e-4)
