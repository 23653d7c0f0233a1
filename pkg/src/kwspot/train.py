"""Supervised training: stratified split, mini-batch Adam, plateau LR schedule,
metrics logging, best-checkpoint retention and evaluation."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, InsufficientDataError, TrainingDivergedError
from .nn import Adam, Model, ModelSpec, cross_entropy, softmax

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 1e-3
    max_epochs: int = 50
    lr_factor: float = 0.5
    lr_patience: int = 3
    min_lr: float = 1e-5
    min_delta: float = 1e-4
    split_ratio: float = 0.8
    seed: int = 0
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.split_ratio < 1:
            raise ConfigError("split_ratio must lie in (0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.learning_rate <= 0 or self.min_lr <= 0 or not 0 < self.lr_factor < 1:
            raise ConfigError("learning rates must be positive and lr_factor in (0, 1)")
        if self.max_epochs < 1 or self.lr_patience < 1:
            raise ConfigError("max_epochs and lr_patience must be >= 1")

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment; ``labels`` is comma-separated."""
        kinds = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in kinds:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                if key == "labels":
                    values[key] = [v.strip() for v in value.split(",") if v.strip()]
                elif kinds[key] == "int":
                    values[key] = int(value)
                else:
                    values[key] = float(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        return cls.from_text(Path(path).read_text())


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    lr: float


class PlateauSchedule:
    """Multiply the learning rate by ``factor`` after ``patience`` epochs without
    a validation-loss improvement of at least ``min_delta``; never below ``min_lr``."""

    def __init__(self, lr, factor=0.5, patience=3, min_lr=1e-5, min_delta=1e-4):
        self.lr, self.factor, self.patience = lr, factor, patience
        self.min_lr, self.min_delta = min_lr, min_delta
        self.best = math.inf
        self.bad_epochs = 0

    def step(self, val_loss: float) -> float:
        if val_loss < self.best - self.min_delta:
            self.best = val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                self.lr = max(self.lr * self.factor, self.min_lr)
                self.bad_epochs = 0
        return self.lr


def split_dataset(labels, ratio: float = 0.8, seed: int = 0):
    """Stratified split of item indices -> (train_idx, val_idx), both sorted.

    Each class keeps ``round(ratio * n)`` items for training, clamped so that
    both sides get at least one.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, val = [], []
    for cls in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < 2:
            raise InsufficientDataError(f"class {cls!r} has {len(idx)} item(s); need >= 2")
        idx = idx[rng.permutation(len(idx))]
        n_train = min(max(int(round(ratio * len(idx))), 1), len(idx) - 1)
        train.extend(idx[:n_train])
        val.extend(idx[n_train:])
    return np.sort(np.asarray(train, dtype=np.int64)), np.sort(np.asarray(val, dtype=np.int64))


def _loss_and_acc(model: Model, X, y, batch_size=256):
    if len(X) == 0:
        return 0.0, 0.0
    probs = model.predict_proba(X, batch_size)
    loss, _ = cross_entropy(probs.astype(np.float64), y)
    return loss, float(np.mean(probs.argmax(axis=1) == y))


def train_model(train_set, val_set, cfg: TrainConfig, spec: ModelSpec | None = None,
                labels=None, on_epoch=None):
    """Train from scratch; return (best model, list of EpochMetrics).

    ``train_set`` and ``val_set`` are ``(X, y)`` pairs of features
    (N, 1, 13, 162) and integer labels. The model with the highest validation
    accuracy is returned; ties go to the lower validation loss.
    """
    X, y = train_set
    Xv, yv = val_set
    if len(X) == 0:
        raise InsufficientDataError("empty training set")
    labels = list(labels or cfg.labels or [str(i) for i in range(int(max(y.max(), yv.max() if len(yv) else 0)) + 1)])
    if spec is None:
        spec = ModelSpec(input_shape=tuple(X.shape[1:]), n_classes=len(labels))
    rng = np.random.default_rng(cfg.seed)
    model = Model(spec, seed=int(rng.integers(2**31)), labels=labels)
    model.fit_input_norm(X)
    opt = Adam(cfg.learning_rate)
    schedule = PlateauSchedule(cfg.learning_rate, cfg.lr_factor, cfg.lr_patience,
                               cfg.min_lr, cfg.min_delta)
    history = []
    best_key, best_state = None, None
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(X))
        total_loss, correct = 0.0, 0
        for start in range(0, len(X), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            logits = model.forward(X[batch], train=True, rng=rng)
            probs = softmax(logits)
            loss, grad = cross_entropy(probs, y[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}; "
                    f"lr={opt.lr:g}, max |logit|={np.abs(logits).max():g}")
            model.backward(grad)
            opt.step(model.named_params(), model.named_grads())
            total_loss += loss * len(batch)
            correct += int(np.sum(probs.argmax(axis=1) == y[batch]))
        val_loss, val_acc = _loss_and_acc(model, Xv, yv)
        m = EpochMetrics(epoch, total_loss / len(X), correct / len(X), val_loss, val_acc, opt.lr)
        history.append(m)
        if on_epoch is not None:
            on_epoch(m)
        log.info("epoch %d loss %.4f acc %.4f val_loss %.4f val_acc %.4f lr %g",
                 epoch, m.train_loss, m.train_acc, val_loss, val_acc, opt.lr)
        key = (val_acc, -val_loss)
        if best_key is None or key > best_key:
            best_key = key
            best_state = {k: v.copy() for k, v in model.state().items()}
        opt.lr = schedule.step(val_loss)
    model.load_state(best_state)
    return model, history


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


def scores_from_confusion(cm: np.ndarray) -> EvalResult:
    tp = np.diag(cm).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(cm.sum(axis=0) > 0, tp / cm.sum(axis=0), 0.0)
        recall = np.where(cm.sum(axis=1) > 0, tp / cm.sum(axis=1), 0.0)
    return EvalResult(float(tp.sum() / cm.sum()), cm, precision, recall)


def evaluate(model: Model, X, y) -> EvalResult:
    """Inference-mode accuracy, confusion matrix (rows true, columns predicted),
    and per-class precision/recall."""
    if len(X) == 0:
        raise InsufficientDataError("cannot evaluate on an empty set")
    pred = model.predict(X)
    return scores_from_confusion(confusion_matrix(y, pred, model.spec.n_classes))


def write_metrics_csv(history, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc", "lr"])
        for m in history:
            w.writerow([m.epoch, f"{m.train_loss:.6f}", f"{m.train_acc:.6f}",
                        f"{m.val_loss:.6f}", f"{m.val_acc:.6f}", f"{m.lr:.8g}"])


def write_confusion_csv(cm: np.ndarray, labels, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["true\\predicted", *labels])
        for name, row in zip(labels, cm):
            w.writerow([name, *row.tolist()])
