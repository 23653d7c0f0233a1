"""WAV decoding/encoding and clip-level signal conditioning.

Clips are mono 16-bit PCM at 44,000 Hz. Every clip fed to the feature
extractor is exactly 1.9 s long (83,600 samples) and RMS-normalized.
"""

from __future__ import annotations

import struct
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DecodeError, RateMismatchError, TooShortError, UnsupportedFormatError

SAMPLE_RATE = 44_000
CLIP_SECONDS = 1.9
CLIP_SAMPLES = 83_600
DEFAULT_TARGET_RMS = 0.1

PathLike = Union[str, Path]


@dataclass
class Waveform:
    """A mono signal: float32 samples in [-1, 1] plus its sample rate."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32).reshape(-1)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class ClipLengthPolicy:
    target_samples: int = CLIP_SAMPLES
    pad_mode: str = "zero-pad-end"  # or "reject"

    def __post_init__(self):
        if self.target_samples <= 0:
            raise ValueError("target_samples must be positive")
        if self.pad_mode not in ("zero-pad-end", "reject"):
            raise ValueError(f"unknown pad_mode {self.pad_mode!r}")


def _iter_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8:pos + 8 + size]
        yield cid, body, len(body) == size
        pos += 8 + size + (size & 1)


def decode_wav_bytes(data: bytes, expected_rate: int | None = SAMPLE_RATE) -> Waveform:
    """Decode an in-memory RIFF/WAVE file. See :func:`load_wav`."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise DecodeError("not a RIFF/WAVE file")
    fmt = None
    pcm = None
    for cid, body, complete in _iter_chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise DecodeError("fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            if fmt is None:
                raise DecodeError("data chunk precedes fmt chunk")
            if not complete:
                raise DecodeError("truncated data chunk")
            pcm = body
            break
    if fmt is None:
        raise DecodeError("missing fmt chunk")
    if pcm is None:
        raise DecodeError("missing data chunk")

    format_code, channels, rate, _, block_align, bits = fmt
    if format_code != 1:
        raise UnsupportedFormatError(f"format code {format_code} is not PCM")
    if channels != 1:
        raise UnsupportedFormatError(f"{channels} channels; only mono is supported")
    if bits != 16 or block_align != 2:
        raise UnsupportedFormatError(f"{bits}-bit samples; only 16-bit is supported")
    if expected_rate is not None and rate != expected_rate:
        raise RateMismatchError(f"sample rate {rate} Hz, expected {expected_rate} Hz")
    if len(pcm) % 2:
        raise DecodeError("odd byte count in 16-bit data chunk")

    ints = np.frombuffer(pcm, dtype="<i2")
    return Waveform(ints.astype(np.float32) / np.float32(32768.0), rate)


def load_wav(path: PathLike, expected_rate: int | None = SAMPLE_RATE) -> Waveform:
    """Read a mono 16-bit PCM WAV file.

    Samples are scaled by 1/32768, so the int16 range maps onto [-1, 1).
    No resampling is ever done: a file whose rate differs from
    ``expected_rate`` raises :class:`RateMismatchError` (pass ``None`` to
    accept any rate).
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    try:
        return decode_wav_bytes(data, expected_rate)
    except (DecodeError, UnsupportedFormatError, RateMismatchError) as exc:
        raise type(exc)(f"{path}: {exc}") from None


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    """Clamp to [-1, 1] and quantize with the same 32768 scale used on decode.

    +1.0 saturates at 32767; every value on the k/32768 grid survives a
    save/load cycle unchanged.
    """
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")


def save_wav(w: Waveform, path: PathLike) -> None:
    if not np.all(np.isfinite(w.samples)):
        raise ValueError("cannot encode non-finite samples")
    with wave.open(str(path), "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(w.sample_rate)
        f.writeframes(to_pcm16(w.samples).tobytes())


def fit_duration(w: Waveform, policy: ClipLengthPolicy = ClipLengthPolicy()) -> Waveform:
    """Truncate or zero-pad (at the end) to exactly ``policy.target_samples``."""
    if w.sample_rate != SAMPLE_RATE:
        raise RateMismatchError(f"sample rate {w.sample_rate} Hz, expected {SAMPLE_RATE} Hz")
    n = policy.target_samples
    x = w.samples
    if len(x) >= n:
        return Waveform(x[:n].copy(), w.sample_rate)
    if policy.pad_mode == "reject":
        raise TooShortError(f"clip has {len(x)} samples, need {n}")
    out = np.zeros(n, dtype=np.float32)
    out[:len(x)] = x
    return Waveform(out, w.sample_rate)


def rms(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(x * x)))


def rms_normalize(w: Waveform, target_rms: float = DEFAULT_TARGET_RMS) -> Waveform:
    """Scale to the given RMS, then clip to [-1, 1]. All-zero input is returned as-is."""
    if target_rms <= 0:
        raise ValueError("target_rms must be positive")
    level = rms(w.samples)
    if level == 0.0:
        return Waveform(w.samples.copy(), w.sample_rate)
    x = np.asarray(w.samples, dtype=np.float64) * (target_rms / level)
    return Waveform(np.clip(x, -1.0, 1.0), w.sample_rate)
