"""Keyword spotting on 1.9 s, 44 kHz clips: MFCC front end, waveform
augmentation, a small numpy CNN, training and streaming detection."""

from .audio_io import CLIP_SAMPLES, SAMPLE_RATE, ClipLengthPolicy, Waveform, fit_duration, load_wav, rms_normalize, save_wav
from .features import FeatureConfig, FeatureMap, mfcc
from .infer import DetectionEvent, StreamConfig, StreamDetector, classify, stream_detect
from .nn import Model, ModelSpec, load_checkpoint, save_checkpoint
from .train import TrainConfig, evaluate, split_dataset, train_model

__version__ = "0.1.0"
