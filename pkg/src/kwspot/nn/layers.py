"""Stateful layer wrappers around the kernels in :mod:`kwspot.nn.functional`."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from . import functional as F


class Layer:
    """Base class. ``params`` are trained, ``buffers`` are saved but not trained."""

    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self._cache = None

    def forward(self, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def output_shape(self, in_shape):
        return in_shape

    def describe(self) -> dict:
        return {"type": self.kind}

    def astype(self, dtype):
        for store in (self.params, self.buffers):
            for k in store:
                store[k] = store[k].astype(dtype)
        return self


def _kaiming_uniform(rng, shape, fan_in, dtype):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv2D(Layer):
    kind = "conv"

    def __init__(self, in_channels, out_channels, rng=None, dtype=np.float32):
        super().__init__()
        self.in_channels, self.out_channels = in_channels, out_channels
        rng = rng or np.random.default_rng(0)
        shape = (out_channels, in_channels, 3, 3)
        self.params["weight"] = _kaiming_uniform(rng, shape, in_channels * 9, dtype)
        self.params["bias"] = np.zeros(out_channels, dtype)

    def forward(self, x, train=False, rng=None):
        out, self._cache = F.conv2d_forward(x, self.params["weight"], self.params["bias"])
        return out

    def backward(self, grad):
        gx, gw, gb = F.conv2d_backward(grad, self._cache)
        self.grads["weight"], self.grads["bias"] = gw, gb
        return gx

    def output_shape(self, in_shape):
        return (self.out_channels,) + tuple(in_shape[1:])

    def describe(self):
        return {"type": self.kind, "in": self.in_channels, "out": self.out_channels}


class BatchNorm2D(Layer):
    kind = "batchnorm"

    def __init__(self, channels, momentum=0.9, eps=1e-5, dtype=np.float32):
        super().__init__()
        self.channels, self.momentum, self.eps = channels, momentum, eps
        self.params["gamma"] = np.ones(channels, dtype)
        self.params["beta"] = np.zeros(channels, dtype)
        self.buffers["running_mean"] = np.zeros(channels, dtype)
        self.buffers["running_var"] = np.ones(channels, dtype)

    def forward(self, x, train=False, rng=None):
        out, self._cache = F.batchnorm_forward(
            x, self.params["gamma"], self.params["beta"],
            self.buffers["running_mean"], self.buffers["running_var"],
            train, self.momentum, self.eps)
        return out

    def backward(self, grad):
        gx, gg, gb = F.batchnorm_backward(grad, self._cache)
        self.grads["gamma"], self.grads["beta"] = gg, gb
        return gx

    def describe(self):
        return {"type": self.kind, "channels": self.channels,
                "momentum": self.momentum, "eps": self.eps}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train=False, rng=None):
        out, self._cache = F.relu_forward(x)
        return out

    def backward(self, grad):
        return F.relu_backward(grad, self._cache)


class MaxPool2D(Layer):
    kind = "maxpool"

    def forward(self, x, train=False, rng=None):
        out, self._cache = F.maxpool2d_forward(x)
        return out

    def backward(self, grad):
        return F.maxpool2d_backward(grad, self._cache)

    def output_shape(self, in_shape):
        c, h, w = in_shape
        return (c, h // 2, w // 2)


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, rate):
        super().__init__()
        if not 0 <= rate < 1:
            raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, train=False, rng=None):
        out, self._cache = F.dropout_forward(x, self.rate, train, rng)
        return out

    def backward(self, grad):
        return F.dropout_backward(grad, self._cache)

    def describe(self):
        return {"type": self.kind, "rate": self.rate}


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, train=False, rng=None):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._cache)

    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_features, out_features, rng=None, dtype=np.float32):
        super().__init__()
        self.in_features, self.out_features = in_features, out_features
        rng = rng or np.random.default_rng(0)
        self.params["weight"] = _kaiming_uniform(
            rng, (out_features, in_features), in_features, dtype)
        self.params["bias"] = np.zeros(out_features, dtype)

    def forward(self, x, train=False, rng=None):
        out, self._cache = F.dense_forward(x, self.params["weight"], self.params["bias"])
        return out

    def backward(self, grad):
        gx, gw, gb = F.dense_backward(grad, self._cache)
        self.grads["weight"], self.grads["bias"] = gw, gb
        return gx

    def output_shape(self, in_shape):
        return (self.out_features,)

    def describe(self):
        return {"type": self.kind, "in": self.in_features, "out": self.out_features}


class InputNorm(Layer):
    """Frozen per-row affine ``(x - mean[row]) / std[row]`` on (B, C, H, W) input.

    Statistics are fitted once on training features (:meth:`fit`) and stored
    as buffers; until then the layer is the identity.
    """

    kind = "inputnorm"

    def __init__(self, rows, dtype=np.float32):
        super().__init__()
        self.rows = rows
        self.buffers["mean"] = np.zeros(rows, dtype)
        self.buffers["std"] = np.ones(rows, dtype)

    def fit(self, X, floor=1e-3):
        X = np.asarray(X, dtype=np.float64)
        self.buffers["mean"] = X.mean(axis=(0, 1, 3)).astype(self.buffers["mean"].dtype)
        std = np.maximum(X.std(axis=(0, 1, 3)), floor)
        self.buffers["std"] = std.astype(self.buffers["std"].dtype)
        return self

    def forward(self, x, train=False, rng=None):
        shape = (1, 1, -1, 1)
        return (x - self.buffers["mean"].reshape(shape)) / self.buffers["std"].reshape(shape)

    def backward(self, grad):
        return grad / self.buffers["std"].reshape(1, 1, -1, 1)

    def describe(self):
        return {"type": self.kind, "rows": self.rows}
