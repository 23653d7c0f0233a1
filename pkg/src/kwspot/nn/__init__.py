"""Minimal numpy CNN toolkit: kernels, layers, model, Adam, checkpoints."""

from .checkpoint import checkpoint_bytes, load_checkpoint, read_checkpoint, save_checkpoint
from .functional import cross_entropy, softmax
from .layers import BatchNorm2D, Conv2D, Dense, Dropout, Flatten, InputNorm, MaxPool2D, ReLU
from .model import Model, ModelSpec
from .optim import Adam

__all__ = [
    "Adam", "BatchNorm2D", "Conv2D", "Dense", "Dropout", "Flatten", "InputNorm", "MaxPool2D",
    "Model", "ModelSpec", "ReLU", "checkpoint_bytes", "cross_entropy", "load_checkpoint",
    "read_checkpoint", "save_checkpoint", "softmax",
]
