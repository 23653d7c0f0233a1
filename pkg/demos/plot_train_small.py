"""
Training the keyword CNN on a small synthetic corpus
=====================================================

Twenty clips per class are synthesised in memory, converted to MFCC maps and
used to train the three-block CNN with Adam and a plateau schedule. Expect a
couple of minutes on one CPU core.
"""

import numpy as np

from kwspot.pipeline import signals_to_features
from kwspot.synth import LABELS, keyword_signal
from kwspot.train import TrainConfig, evaluate, split_dataset, train_model

signals, labels = [], []
for ci, label in enumerate(LABELS):
    for i in range(20):
        signals.append(np.clip(keyword_signal(label, np.random.default_rng([0, ci, i])), -1, 1))
        labels.append(ci)
X, y = signals_to_features(signals), np.asarray(labels)
print("dataset:", X.shape)

# Stratified 80/20 split, then train with the default hyper-parameters.
tr, va = split_dataset(y, 0.8, seed=0)
cfg = TrainConfig(max_epochs=30)
model, history = train_model((X[tr], y[tr]), (X[va], y[va]), cfg, labels=LABELS,
                             on_epoch=lambda m: print(
                                 f"epoch {m.epoch:2d}  loss {m.train_loss:.3f}  "
                                 f"val acc {m.val_acc:.3f}  lr {m.lr:g}"))

# The returned model is the epoch with the best validation accuracy.
result = evaluate(model, X[va], y[va])
print(f"validation accuracy {result.accuracy:.3f}; {model.n_params()} parameters")
print("classes never predicted correctly:",
      [LABELS[i] for i in np.flatnonzero(result.recall == 0)] or "none")
