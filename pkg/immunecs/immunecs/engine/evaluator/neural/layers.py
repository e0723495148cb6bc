# -*- coding: utf-8 -*-
"""
Trainable primitives with hand-written backward passes.

Tensors are NCHW. Convolutions use 'same' padding with stride 1 and odd
kernels; each layer caches what its backward pass needs during ``forward``.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def he_normal(rng, shape, fan_in, dtype):
    """Variance-scaled fan-in initialization, std = sqrt(2 / fan_in)"""
    return (rng.standard_normal(shape) * math.sqrt(2.0 / fan_in)).astype(dtype)


def _pad(x, p, value=0.0):
    if not p:
        return x
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)), constant_values=value)


def _windows(xp, k):
    # (B, C, H, W, k, k)
    return sliding_window_view(xp, (k, k), axis=(2, 3))


class Module:
    """A layer with named parameters, matching gradients and non-trained buffers"""

    def __init__(self):
        self.params = {}
        self.grads = {}
        self.buffers = {}

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def parameters(self):
        return [(self, name) for name in self.params]

    def __call__(self, x, training=False):
        return self.forward(x, training)


class Conv2d(Module):
    def __init__(self, in_channels, out_channels, kernel_size, rng, dtype=np.float32):
        super().__init__()
        if kernel_size % 2 != 1:
            raise ValueError(f"Kernel size must be odd, got {kernel_size}")
        self.kernel_size = kernel_size
        fan_in = in_channels * kernel_size * kernel_size
        self.params["weight"] = he_normal(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in, dtype)
        self.params["bias"] = np.zeros(out_channels, dtype=dtype)

    def forward(self, x, training=False):
        p = self.kernel_size // 2
        self._windows = _windows(_pad(x, p), self.kernel_size)
        out = np.tensordot(self._windows, self.params["weight"], axes=([1, 4, 5], [1, 2, 3]))
        return out.transpose(0, 3, 1, 2) + self.params["bias"][None, :, None, None]

    def backward(self, dout):
        k = self.kernel_size
        self.grads["weight"] = np.tensordot(dout, self._windows, axes=([0, 2, 3], [0, 2, 3]))
        self.grads["bias"] = dout.sum(axis=(0, 2, 3))

        flipped = self.params["weight"][:, :, ::-1, ::-1]
        dx = np.tensordot(_windows(_pad(dout, k // 2), k), flipped, axes=([1, 4, 5], [0, 2, 3]))
        return dx.transpose(0, 3, 1, 2)


class DepthwiseConv2d(Module):
    def __init__(self, channels, kernel_size, rng, dtype=np.float32):
        super().__init__()
        if kernel_size % 2 != 1:
            raise ValueError(f"Kernel size must be odd, got {kernel_size}")
        self.kernel_size = kernel_size
        self.params["weight"] = he_normal(rng, (channels, kernel_size, kernel_size), kernel_size * kernel_size, dtype)
        self.params["bias"] = np.zeros(channels, dtype=dtype)

    def forward(self, x, training=False):
        self._windows = _windows(_pad(x, self.kernel_size // 2), self.kernel_size)
        out = np.einsum("bchwij,cij->bchw", self._windows, self.params["weight"], optimize=True)
        return out + self.params["bias"][None, :, None, None]

    def backward(self, dout):
        k = self.kernel_size
        self.grads["weight"] = np.einsum("bchwij,bchw->cij", self._windows, dout, optimize=True)
        self.grads["bias"] = dout.sum(axis=(0, 2, 3))

        flipped = self.params["weight"][:, ::-1, ::-1]
        return np.einsum("bchwij,cij->bchw", _windows(_pad(dout, k // 2), k), flipped, optimize=True)


class BatchNorm(Module):
    """Batch normalization over NCHW (per channel) or NC (per feature) inputs"""

    def __init__(self, channels, dtype=np.float32, momentum=0.1, eps=1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.params["gamma"] = np.ones(channels, dtype=dtype)
        self.params["beta"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_mean"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_var"] = np.ones(channels, dtype=dtype)

    @staticmethod
    def _layout(x):
        if x.ndim == 4:
            return (0, 2, 3), (1, -1, 1, 1)
        return (0,), (1, -1)

    def forward(self, x, training=False):
        axes, shape = self._layout(x)
        if training:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            count = x.size // x.shape[1]
            unbiased = var * count / max(count - 1, 1)
            m = self.momentum
            self.buffers["running_mean"][...] = (1 - m) * self.buffers["running_mean"] + m * mean
            self.buffers["running_var"][...] = (1 - m) * self.buffers["running_var"] + m * unbiased
        else:
            mean = self.buffers["running_mean"]
            var = self.buffers["running_var"]

        self._training = training
        self._inv_std = (1.0 / np.sqrt(var + self.eps)).reshape(shape)
        self._xhat = (x - mean.reshape(shape)) * self._inv_std
        return self.params["gamma"].reshape(shape) * self._xhat + self.params["beta"].reshape(shape)

    def backward(self, dout):
        axes, shape = self._layout(dout)
        self.grads["gamma"] = (dout * self._xhat).sum(axis=axes)
        self.grads["beta"] = dout.sum(axis=axes)

        dxhat = dout * self.params["gamma"].reshape(shape)
        if not self._training:
            return dxhat * self._inv_std

        count = dout.size // dout.shape[1]
        return (self._inv_std / count) * (
            count * dxhat
            - dxhat.sum(axis=axes).reshape(shape)
            - self._xhat * (dxhat * self._xhat).sum(axis=axes).reshape(shape)
        )


class ReLU(Module):
    def forward(self, x, training=False):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout):
        return dout * self._mask


class Pool2d(Module):
    """Max or average pooling, padding k // 2, stride 2 (stride 1 once the map is 1 pixel wide)"""

    def __init__(self, kind, kernel_size):
        super().__init__()
        if kind not in ("Max", "Avg"):
            raise ValueError(f"Unknown pool type: {kind}")
        self.kind = kind
        self.kernel_size = kernel_size

    @staticmethod
    def stride_for(height, width):
        return 1 if min(height, width) == 1 else 2

    @staticmethod
    def output_size(size, kernel_size, stride):
        return (size + 2 * (kernel_size // 2) - kernel_size) // stride + 1

    def forward(self, x, training=False):
        k = self.kernel_size
        s = self.stride_for(x.shape[2], x.shape[3])
        fill = -np.inf if self.kind == "Max" else 0.0
        win = _windows(_pad(x, k // 2, fill), k)[:, :, ::s, ::s]

        self._stride = s
        self._input_shape = x.shape
        self._out_hw = win.shape[2:4]

        if self.kind == "Avg":
            return win.mean(axis=(4, 5))

        flat = win.reshape(win.shape[:4] + (k * k,))
        self._argmax = flat.argmax(axis=-1)
        return np.take_along_axis(flat, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, dout):
        k = self.kernel_size
        p = k // 2
        s = self._stride
        ho, wo = self._out_hw
        b, c, h, w = self._input_shape

        dxp = np.zeros((b, c, h + 2 * p, w + 2 * p), dtype=dout.dtype)
        for index in range(k * k):
            i, j = divmod(index, k)
            rows = slice(i, i + s * (ho - 1) + 1, s)
            cols = slice(j, j + s * (wo - 1) + 1, s)
            if self.kind == "Avg":
                dxp[:, :, rows, cols] += dout / (k * k)
            else:
                dxp[:, :, rows, cols] += dout * (self._argmax == index)

        return dxp[:, :, p:p + h, p:p + w]


class GlobalConcatPool(Module):
    """Concatenate global average and global max pooling: (B, C, H, W) -> (B, 2C)"""

    def forward(self, x, training=False):
        b, c, h, w = x.shape
        flat = x.reshape(b, c, h * w)
        self._shape = x.shape
        self._argmax = flat.argmax(axis=-1)
        peak = np.take_along_axis(flat, self._argmax[..., None], axis=-1)[..., 0]
        return np.concatenate([flat.mean(axis=-1), peak], axis=1)

    def backward(self, dout):
        b, c, h, w = self._shape
        dflat = np.repeat((dout[:, :c] / (h * w))[..., None], h * w, axis=-1)
        index = self._argmax[..., None]
        np.put_along_axis(dflat, index, np.take_along_axis(dflat, index, axis=-1) + dout[:, c:, None], axis=-1)
        return dflat.reshape(self._shape)


class Dropout(Module):
    def __init__(self, rate, rng):
        super().__init__()
        self.rate = rate
        self.rng = rng

    def forward(self, x, training=False):
        if not training or self.rate <= 0:
            self._mask = None
            return x
        self._mask = (self.rng.random(x.shape) >= self.rate).astype(x.dtype) / (1.0 - self.rate)
        return x * self._mask

    def backward(self, dout):
        return dout if self._mask is None else dout * self._mask


class Dense(Module):
    def __init__(self, in_features, out_features, rng, dtype=np.float32):
        super().__init__()
        self.params["weight"] = he_normal(rng, (out_features, in_features), in_features, dtype)
        self.params["bias"] = np.zeros(out_features, dtype=dtype)

    def forward(self, x, training=False):
        self._x = x
        return x @ self.params["weight"].T + self.params["bias"]

    def backward(self, dout):
        self.grads["weight"] = dout.T @ self._x
        self.grads["bias"] = dout.sum(axis=0)
        return dout @ self.params["weight"]


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy loss and its gradient with respect to the logits"""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(len(labels))
    loss = -float(log_probs[rows, labels].mean())

    dlogits = np.exp(log_probs)
    dlogits[rows, labels] -= 1.0
    return loss, dlogits / len(labels)
