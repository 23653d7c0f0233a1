"""Single-clip classification and sliding-window keyword detection on streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import CLIP_SAMPLES, DEFAULT_TARGET_RMS, SAMPLE_RATE, Waveform
from .errors import ConfigError, RateMismatchError, ShapeError
from .features import FeatureConfig
from .nn import Model
from .pipeline import signals_to_features


@dataclass(frozen=True)
class StreamConfig:
    window: int = CLIP_SAMPLES
    hop: int = 11_000
    threshold: float = 0.7
    smoothing: int = 2  # consecutive agreeing windows needed for an event
    refractory_windows: float = 1.0  # suppression after an event, in window lengths
    negative_label: str = "negative"
    sample_rate: int = SAMPLE_RATE
    target_rms: float = DEFAULT_TARGET_RMS

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        if not 0 < self.hop <= self.window:
            raise ConfigError("stream hop must lie in (0, window]")
        if self.smoothing < 1 or self.refractory_windows < 0:
            raise ConfigError("smoothing must be >= 1 and refractory >= 0")


@dataclass(frozen=True)
class DetectionEvent:
    label: str
    confidence: float
    start: float  # seconds from stream start

    def format(self) -> str:
        return f"{self.start:.3f}\t{self.label}\t{self.confidence:.4f}"


def _check_model(model: Model, cfg: FeatureConfig):
    expected = (1, cfg.n_mfcc, cfg.n_frames(CLIP_SAMPLES))
    if tuple(model.spec.input_shape) != expected:
        raise ShapeError(f"model expects input {tuple(model.spec.input_shape)}, "
                         f"feature pipeline produces {expected}")


def classify(model: Model, w: Waveform, cfg: FeatureConfig = FeatureConfig(),
             target_rms: float = DEFAULT_TARGET_RMS):
    """Label and full probability vector for one clip.

    The clip goes through the training-time conditioning (fit to 1.9 s,
    RMS-normalize) before feature extraction. Ties resolve to the lowest index.
    """
    if w.sample_rate != cfg.sample_rate:
        raise RateMismatchError(f"clip at {w.sample_rate} Hz, model expects {cfg.sample_rate} Hz")
    _check_model(model, cfg)
    probs = model.predict_proba(signals_to_features([w.samples], cfg, target_rms))[0]
    return model.labels[int(np.argmax(probs))], probs


class StreamDetector:
    """Incremental detector: feed chunks with :meth:`push`, collect events.

    Windows start at multiples of ``cfg.hop`` and are classified one at a
    time, so the events depend only on the concatenated samples, never on
    how they were chunked.
    """

    def __init__(self, model: Model, cfg: StreamConfig = StreamConfig(),
                 feature_cfg: FeatureConfig = FeatureConfig()):
        if cfg.negative_label not in model.labels:
            raise ConfigError(f"negative label {cfg.negative_label!r} not among model labels")
        _check_model(model, feature_cfg)
        self.model, self.cfg, self.feature_cfg = model, cfg, feature_cfg
        self.events: list[DetectionEvent] = []
        self._buf = np.zeros(0, np.float32)
        self._buf_start = 0  # stream index of _buf[0]
        self._next_window = 0
        self._suppress_until = 0
        self._run_label = None
        self._run_start = 0
        self._run_conf: list[float] = []

    def push(self, chunk) -> list[DetectionEvent]:
        """Append samples; return the events completed by this chunk."""
        chunk = np.asarray(chunk, dtype=np.float32).reshape(-1)
        self._buf = np.concatenate((self._buf, chunk))
        new = []
        cfg = self.cfg
        while self._next_window + cfg.window <= self._buf_start + len(self._buf):
            s = self._next_window
            self._next_window += cfg.hop
            if s < self._suppress_until:
                continue
            off = s - self._buf_start
            event = self._observe(s, self._buf[off:off + cfg.window])
            if event is not None:
                new.append(event)
        drop = self._next_window - self._buf_start
        if drop > 0:
            self._buf = self._buf[drop:]
            self._buf_start += drop
        self.events.extend(new)
        return new

    def window_probs(self, window: np.ndarray) -> np.ndarray:
        """Class probabilities for one window of ``cfg.window`` samples."""
        feats = signals_to_features([window], self.feature_cfg, self.cfg.target_rms)
        return self.model.predict_proba(feats)[0]

    def _observe(self, start: int, window: np.ndarray):
        cfg = self.cfg
        probs = self.window_probs(window)
        k = int(np.argmax(probs))
        label, conf = self.model.labels[k], float(probs[k])
        if label == cfg.negative_label or conf < cfg.threshold:
            self._run_label, self._run_conf = None, []
            return None
        if label != self._run_label:
            self._run_label, self._run_start, self._run_conf = label, start, []
        self._run_conf.append(conf)
        if len(self._run_conf) < cfg.smoothing:
            return None
        event = DetectionEvent(label, float(np.mean(self._run_conf)),
                               self._run_start / cfg.sample_rate)
        self._suppress_until = self._run_start + int(round(cfg.refractory_windows * cfg.window))
        self._run_label, self._run_conf = None, []
        return event


def stream_detect(model: Model, stream, cfg: StreamConfig = StreamConfig(),
                  feature_cfg: FeatureConfig = FeatureConfig()) -> list[DetectionEvent]:
    """Run the detector over a whole stream.

    ``stream`` may be a :class:`Waveform`, a 1-D array, or an iterable of
    chunks. A stream shorter than one window yields no events.
    """
    if isinstance(stream, Waveform):
        if stream.sample_rate != cfg.sample_rate:
            raise RateMismatchError(f"stream at {stream.sample_rate} Hz, expected {cfg.sample_rate} Hz")
        chunks = [stream.samples]
    elif isinstance(stream, np.ndarray):
        chunks = [stream]
    else:
        chunks = stream
    det = StreamDetector(model, cfg, feature_cfg)
    for chunk in chunks:
        det.push(chunk)
    return det.events
