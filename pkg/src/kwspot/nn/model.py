"""Sequential CNN classifier and its architecture descriptor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from . import functional as F
from .layers import BatchNorm2D, Conv2D, Dense, Dropout, Flatten, InputNorm, Layer, MaxPool2D, ReLU


@dataclass(frozen=True)
class ModelSpec:
    """Input normalization, conv blocks (conv 3x3 -> BN -> ReLU -> pool 2x2 ->
    dropout), then two dense layers.

    The defaults give 13x162 -> 6x81 -> 3x40 -> 1x20, flatten 128*20 = 2560,
    dense 128, dense ``n_classes``.
    """

    input_shape: tuple = (1, 13, 162)
    conv_channels: tuple = (32, 64, 128)
    dense_units: int = 128
    n_classes: int = 21
    conv_dropout: float = 0.25
    dense_dropout: float = 0.5
    input_norm: bool = True

    def layer_list(self) -> list[dict]:
        layers = []
        if self.input_norm:
            layers.append({"type": "inputnorm", "rows": self.input_shape[1]})
        c = self.input_shape[0]
        for out in self.conv_channels:
            layers += [{"type": "conv", "in": c, "out": out},
                       {"type": "batchnorm", "channels": out},
                       {"type": "relu"}, {"type": "maxpool"},
                       {"type": "dropout", "rate": self.conv_dropout}]
            c = out
        layers.append({"type": "flatten"})
        layers.append({"type": "dense", "in": self.flat_features(), "out": self.dense_units})
        layers += [{"type": "relu"}, {"type": "dropout", "rate": self.dense_dropout}]
        layers.append({"type": "dense", "in": self.dense_units, "out": self.n_classes})
        return layers

    def spatial_chain(self) -> list[tuple[int, int]]:
        h, w = self.input_shape[1:]
        chain = [(h, w)]
        for _ in self.conv_channels:
            h, w = h // 2, w // 2
            chain.append((h, w))
        return chain

    def flat_features(self) -> int:
        h, w = self.spatial_chain()[-1]
        if h < 1 or w < 1:
            raise ShapeError(f"input {self.input_shape} collapses to {h}x{w} after pooling")
        return self.conv_channels[-1] * h * w

    def to_dict(self) -> dict:
        return {"input_shape": list(self.input_shape),
                "conv_channels": list(self.conv_channels),
                "dense_units": self.dense_units, "n_classes": self.n_classes,
                "conv_dropout": self.conv_dropout, "dense_dropout": self.dense_dropout,
                "input_norm": self.input_norm}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(tuple(d["input_shape"]), tuple(d["conv_channels"]), d["dense_units"],
                   d["n_classes"], d["conv_dropout"], d["dense_dropout"],
                   d.get("input_norm", True))


def _build_layer(desc, rng, dtype) -> Layer:
    kind = desc["type"]
    if kind == "conv":
        return Conv2D(desc["in"], desc["out"], rng, dtype)
    if kind == "batchnorm":
        return BatchNorm2D(desc["channels"], dtype=dtype)
    if kind == "dense":
        return Dense(desc["in"], desc["out"], rng, dtype)
    if kind == "dropout":
        return Dropout(desc["rate"])
    if kind == "inputnorm":
        return InputNorm(desc["rows"], dtype)
    return {"relu": ReLU, "maxpool": MaxPool2D, "flatten": Flatten}[kind]()


class Model:
    """A feed-forward stack producing class logits.

    ``forward`` returns logits; ``predict_proba`` applies softmax. Training mode
    uses batch statistics and dropout (drawing masks from ``rng``); inference
    mode is deterministic.
    """

    def __init__(self, spec: ModelSpec = ModelSpec(), seed: int = 0,
                 dtype=np.float32, labels=None):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.layers = [_build_layer(d, rng, self.dtype) for d in spec.layer_list()]
        self.labels = list(labels) if labels is not None else [str(i) for i in range(spec.n_classes)]
        if len(self.labels) != spec.n_classes:
            raise ShapeError(f"{len(self.labels)} labels for {spec.n_classes} classes")

    def forward(self, x, train=False, rng=None):
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 4 or x.shape[1:] != tuple(self.spec.input_shape):
            raise ShapeError(f"expected input (B, {', '.join(map(str, self.spec.input_shape))}), "
                             f"got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x, train, rng)
        return x

    def fit_input_norm(self, X):
        """Fit the input normalization statistics (no-op when the spec has none)."""
        for layer in self.layers:
            if isinstance(layer, InputNorm):
                layer.fit(X)
        return self

    def backward(self, grad_logits):
        """Backpropagate; leaves gradients in each layer's ``grads``. Returns d(loss)/d(input)."""
        g = np.asarray(grad_logits, dtype=self.dtype)
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def predict_proba(self, x, batch_size=256):
        out = [F.softmax(self.forward(x[i:i + batch_size]))
               for i in range(0, len(x), batch_size)]
        return np.concatenate(out) if out else np.zeros((0, self.spec.n_classes), self.dtype)

    def predict(self, x, batch_size=256):
        return self.predict_proba(x, batch_size).argmax(axis=1)

    def named_params(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, l in enumerate(self.layers) for k, v in l.params.items()}

    def named_grads(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, l in enumerate(self.layers) for k, v in l.grads.items()}

    def named_buffers(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, l in enumerate(self.layers) for k, v in l.buffers.items()}

    def state(self) -> dict[str, np.ndarray]:
        """Parameters and buffers in a fixed order, keyed ``<layer>.<name>``."""
        out = {}
        for i, layer in enumerate(self.layers):
            for store in (layer.params, layer.buffers):
                for k, v in store.items():
                    out[f"{i}.{k}"] = v
        return out

    def load_state(self, state: dict[str, np.ndarray]):
        for i, layer in enumerate(self.layers):
            for store in (layer.params, layer.buffers):
                for k in store:
                    value = np.asarray(state[f"{i}.{k}"])
                    if value.shape != store[k].shape:
                        raise ShapeError(f"{i}.{k}: shape {value.shape} != {store[k].shape}")
                    store[k] = value.astype(self.dtype).copy()

    def copy(self, dtype=None) -> "Model":
        clone = Model(self.spec, dtype=dtype or self.dtype, labels=self.labels)
        clone.load_state(self.state())
        return clone

    def n_params(self) -> int:
        return sum(v.size for v in self.named_params().values())
