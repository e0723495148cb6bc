# -*- coding: utf-8 -*-
import unittest

import numpy as np

from immunecs.immunecs.engine.evaluator.neural.layers import (
    BatchNorm,
    Conv2d,
    Dense,
    DepthwiseConv2d,
    Dropout,
    GlobalConcatPool,
    Pool2d,
    ReLU,
    softmax,
    softmax_cross_entropy,
)

from .helpers import rng

EPS = 1e-6


def numeric_gradient(loss, array):
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        saved = array[index]
        array[index] = saved + EPS
        upper = loss()
        array[index] = saved - EPS
        lower = loss()
        array[index] = saved
        grad[index] = (upper - lower) / (2 * EPS)
    return grad


def relative_error(analytic, numeric):
    scale = max(1e-8, np.abs(analytic).max() + np.abs(numeric).max())
    return float(np.abs(analytic - numeric).max() / scale)


class GradientCheckMixin:
    def check_gradients(self, module, x, training=False, tolerance=1e-4):
        """Compare backward() with central differences of sum(out * R)"""
        generator = rng(99)
        out = module.forward(x, training)
        weights = generator.standard_normal(out.shape)
        dx = module.backward(weights)
        analytic = {name: grad.copy() for name, grad in module.grads.items()}

        def loss():
            return float((module.forward(x, training) * weights).sum())

        self.assertLess(relative_error(dx, numeric_gradient(loss, x)), tolerance)
        for name, param in module.params.items():
            self.assertLess(relative_error(analytic[name], numeric_gradient(loss, param)), tolerance, name)


def naive_conv(x, weight, bias):
    b, c, h, w = x.shape
    out_channels, _, k, _ = weight.shape
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    out = np.zeros((b, out_channels, h, w))
    for n in range(b):
        for o in range(out_channels):
            for i in range(h):
                for j in range(w):
                    out[n, o, i, j] = (xp[n, :, i:i + k, j:j + k] * weight[o]).sum() + bias[o]
    return out


class TestForward(unittest.TestCase):
    def test_conv_matches_naive_loops(self):
        generator = rng(1)
        conv = Conv2d(2, 3, 3, generator, np.float64)
        conv.params["bias"][...] = generator.standard_normal(3)
        x = generator.standard_normal((2, 2, 5, 4))
        np.testing.assert_allclose(conv.forward(x), naive_conv(x, conv.params["weight"], conv.params["bias"]),
                                   atol=1e-12)

    def test_even_kernel_rejected(self):
        self.assertRaises(ValueError, Conv2d, 1, 1, 2, rng())
        self.assertRaises(ValueError, DepthwiseConv2d, 1, 4, rng())

    def test_fan_in_initialization_variance(self):
        generator = rng(11)
        layers = {
            2.0 / 36: lambda: Conv2d(4, 4, 3, generator, np.float64),
            2.0 / 9: lambda: DepthwiseConv2d(4, 3, generator, np.float64),
            2.0 / 16: lambda: Dense(16, 4, generator, np.float64),
        }
        for expected, build in layers.items():
            weights = np.concatenate([build().params["weight"].ravel() for _ in range(1000)])
            self.assertAlmostEqual(weights.var() / expected, 1.0, delta=0.05)

    def test_pool_shapes(self):
        x = rng(2).standard_normal((1, 2, 5, 5))
        self.assertEqual(Pool2d("Max", 3).forward(x).shape, (1, 2, 3, 3))
        self.assertEqual(Pool2d("Avg", 5).forward(x).shape, (1, 2, 3, 3))
        self.assertEqual(Pool2d("Max", 3).forward(x[:, :, :1, :1]).shape, (1, 2, 1, 1))
        self.assertEqual(Pool2d.output_size(1, 3, 1), 1)
        self.assertEqual(Pool2d.output_size(16, 5, 2), 8)
        self.assertRaises(ValueError, Pool2d, "Min", 3)

    def test_max_pool_ignores_padding(self):
        x = -np.ones((1, 1, 3, 3))
        np.testing.assert_array_equal(Pool2d("Max", 3).forward(x), -np.ones((1, 1, 2, 2)))

    def test_global_concat_pool(self):
        x = np.arange(8, dtype=float).reshape(1, 2, 2, 2)
        np.testing.assert_array_equal(GlobalConcatPool().forward(x), [[1.5, 5.5, 3.0, 7.0]])

    def test_batchnorm_running_statistics(self):
        bn = BatchNorm(2, np.float64, momentum=0.5)
        x = rng(3).standard_normal((8, 2, 3, 3)) * 2.0 + 1.0
        out = bn.forward(x, training=True)
        np.testing.assert_allclose(out.mean(axis=(0, 2, 3)), 0.0, atol=1e-10)
        np.testing.assert_allclose(bn.buffers["running_mean"], 0.5 * x.mean(axis=(0, 2, 3)))

    def test_dropout(self):
        x = np.ones((50, 40))
        dropout = Dropout(0.5, rng(4))
        np.testing.assert_array_equal(dropout.forward(x, training=False), x)
        kept = dropout.forward(x, training=True)
        self.assertTrue(set(np.unique(kept)) <= {0.0, 2.0})
        self.assertAlmostEqual(kept.mean(), 1.0, delta=0.1)

    def test_softmax(self):
        probabilities = softmax(np.array([[1000.0, 1000.0], [0.0, np.log(3.0)]]))
        np.testing.assert_allclose(probabilities, [[0.5, 0.5], [0.25, 0.75]])


class TestGradients(GradientCheckMixin, unittest.TestCase):
    def test_conv(self):
        generator = rng(5)
        self.check_gradients(Conv2d(2, 3, 3, generator, np.float64), generator.standard_normal((2, 2, 4, 4)))

    def test_pointwise_conv(self):
        generator = rng(6)
        self.check_gradients(Conv2d(3, 2, 1, generator, np.float64), generator.standard_normal((2, 3, 3, 3)))

    def test_depthwise_conv(self):
        generator = rng(7)
        self.check_gradients(DepthwiseConv2d(2, 5, generator, np.float64), generator.standard_normal((2, 2, 5, 5)))

    def test_batchnorm(self):
        generator = rng(8)
        x = generator.standard_normal((4, 3, 2, 2))
        bn = BatchNorm(3, np.float64)
        bn.params["gamma"][...] = generator.uniform(0.5, 1.5, 3)
        self.check_gradients(bn, x, training=True)
        self.check_gradients(bn, x, training=False)
        self.check_gradients(BatchNorm(5, np.float64), generator.standard_normal((6, 5)), training=True)

    def test_relu(self):
        self.check_gradients(ReLU(), rng(9).standard_normal((2, 3, 4, 4)))

    def test_pools(self):
        generator = rng(10)
        for kind in ("Max", "Avg"):
            for k in (3, 5):
                self.check_gradients(Pool2d(kind, k), generator.standard_normal((2, 2, 5, 5)))
        self.check_gradients(Pool2d("Avg", 3), generator.standard_normal((1, 2, 1, 1)))

    def test_global_concat_pool(self):
        self.check_gradients(GlobalConcatPool(), rng(11).standard_normal((2, 3, 3, 3)))

    def test_dense(self):
        generator = rng(12)
        self.check_gradients(Dense(6, 4, generator, np.float64), generator.standard_normal((5, 6)))

    def test_dropout_inference(self):
        self.check_gradients(Dropout(0.3, rng(13)), rng(14).standard_normal((3, 4)))

    def test_softmax_cross_entropy(self):
        generator = rng(15)
        logits = generator.standard_normal((6, 4))
        labels = np.array([0, 1, 2, 3, 1, 0])
        loss, analytic = softmax_cross_entropy(logits, labels)
        numeric = numeric_gradient(lambda: softmax_cross_entropy(logits, labels)[0], logits)

        self.assertGreater(loss, 0.0)
        self.assertLess(relative_error(analytic, numeric), 1e-5)
