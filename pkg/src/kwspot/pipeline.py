"""Clip conditioning shared by training and inference, and dataset discovery."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio_io import CLIP_SAMPLES, DEFAULT_TARGET_RMS, ClipLengthPolicy, Waveform, fit_duration, load_wav, rms_normalize
from .features import FeatureConfig, mfcc_batch


def list_dataset(root) -> list[tuple[Path, str]]:
    """``(path, label)`` for every ``<root>/<label>/*.wav``, sorted by label then name."""
    root = Path(root)
    items = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for wav in sorted(class_dir.glob("*.wav")):
            items.append((wav, class_dir.name))
    return items


def prepare_clip(w: Waveform, target_rms: float = DEFAULT_TARGET_RMS,
                 policy: ClipLengthPolicy = ClipLengthPolicy()) -> Waveform:
    """Fit to 1.9 s and normalize the level, exactly as done before feature extraction."""
    return rms_normalize(fit_duration(w, policy), target_rms)


def signals_to_features(signals, cfg: FeatureConfig = FeatureConfig(),
                        target_rms: float = DEFAULT_TARGET_RMS) -> np.ndarray:
    """Condition each row of ``signals`` and return network input of shape (B, 1, 13, 162)."""
    prepared = np.stack([prepare_clip(Waveform(s), target_rms).samples for s in signals]) \
        if len(signals) else np.zeros((0, CLIP_SAMPLES), np.float32)
    return mfcc_batch(prepared, cfg)[:, None]


def load_dataset_features(items, label_names, cfg: FeatureConfig = FeatureConfig(),
                          chunk: int = 64):
    """Load and featurize ``(path, label)`` pairs -> (X float32 (N,1,13,162), y int64)."""
    index = {name: i for i, name in enumerate(label_names)}
    X, y = [], []
    for start in range(0, len(items), chunk):
        part = items[start:start + chunk]
        X.append(signals_to_features([load_wav(p).samples for p, _ in part], cfg))
        y.extend(index[label] for _, label in part)
    if not X:
        return np.zeros((0, 1, cfg.n_mfcc, cfg.n_frames(CLIP_SAMPLES)), np.float32), np.zeros(0, np.int64)
    return np.concatenate(X), np.asarray(y, dtype=np.int64)
