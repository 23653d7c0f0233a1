"""MFCC front end: Hann window, radix-2 FFT, mel filterbank, log, DCT-II.

A 1.9 s clip at 44 kHz (83,600 samples) framed with n_fft=1024, hop=512
yields 162 frames; each frame is reduced to 13 cepstral coefficients, giving
a 13 x 162 feature map per clip.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .audio_io import SAMPLE_RATE, Waveform
from .errors import ConfigError, DecodeError, DomainError, TooShortError

FEATURE_MAGIC = b"MFCC"
FEATURE_VERSION = 1


@dataclass(frozen=True)
class FeatureConfig:
    n_fft: int = 1024
    hop: int = 512
    n_mels: int = 40
    n_mfcc: int = 13
    f_min: float = 0.0
    f_max: float = 22_000.0
    log_floor: float = 1e-10
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        if self.n_fft < 2:
            raise ConfigError("n_fft must be at least 2")
        if not 0 < self.hop <= self.n_fft:
            raise ConfigError("hop must lie in (0, n_fft]")
        if not 0 < self.n_mfcc <= self.n_mels:
            raise ConfigError("n_mfcc must lie in (0, n_mels]")
        if not 0 <= self.f_min < self.f_max <= self.sample_rate / 2:
            raise ConfigError("need 0 <= f_min < f_max <= sample_rate / 2")
        if self.log_floor <= 0:
            raise ConfigError("log_floor must be positive")

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.n_fft:
            return 0
        return (n_samples - self.n_fft) // self.hop + 1


@dataclass
class FeatureMap:
    """MFCC matrix of shape (n_mfcc, n_frames), float32."""

    coefficients: np.ndarray
    n_fft: int = 1024
    hop: int = 512
    sample_rate: int = SAMPLE_RATE

    @property
    def shape(self):
        return self.coefficients.shape


def hann_window(N: int) -> np.ndarray:
    """Symmetric Hann window ``0.5 - 0.5 cos(2 pi n / (N - 1))``, n = 0..N-1."""
    if N < 2:
        raise ConfigError(f"window length must be >= 2, got {N}")
    n = np.arange(N, dtype=np.float64)
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / (N - 1))
    # Exact endpoints and mirror symmetry regardless of cos rounding.
    w[0] = w[-1] = 0.0
    half = N // 2
    w[N - half:] = w[:half][::-1]
    return w


def frame_signal(x, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Split a signal into overlapping frames (read-only view).

    Frame i covers samples ``[i * hop, i * hop + n_fft)``; a trailing partial
    frame is dropped. Works on a trailing time axis, so ``x`` may be
    (L,) or (B, L); the result is (..., n_frames, n_fft).
    """
    if isinstance(x, Waveform):
        x = x.samples
    x = np.asarray(x)
    if x.shape[-1] < cfg.n_fft:
        raise TooShortError(f"signal has {x.shape[-1]} samples, frame needs {cfg.n_fft}")
    windows = np.lib.stride_tricks.sliding_window_view(x, cfg.n_fft, axis=-1)
    return windows[..., ::cfg.hop, :]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@lru_cache(maxsize=None)
def _fft_plan(n: int):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    k = np.arange(n // 2)
    twiddle = np.exp(-2j * np.pi * k / n)
    return rev, twiddle


def fft(x: np.ndarray) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT along the last axis.

    The length must be a power of two. Leading axes are transformed
    independently, which keeps the butterflies vectorized over frames.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    if not _is_power_of_two(n):
        raise ValueError(f"radix-2 FFT needs a power-of-two length, got {n}")
    rev, twiddle = _fft_plan(n)
    lead = x.shape[:-1]
    y = x[..., rev].astype(np.complex128).reshape(-1, n)
    m = 2
    while m <= n:
        half = m // 2
        w = twiddle[:: n // m]
        blocks = y.reshape(y.shape[0], n // m, m)
        even = blocks[..., :half]
        odd = blocks[..., half:] * w
        y = np.concatenate((even + odd, even - odd), axis=-1).reshape(-1, n)
        m *= 2
    return y.reshape(*lead, n)


def dft_direct(x: np.ndarray) -> np.ndarray:
    """O(N^2) evaluation of ``X[k] = sum_n x[n] exp(-2 pi i n k / N)``."""
    x = np.asarray(x)
    n = x.shape[-1]
    nk = np.outer(np.arange(n), np.arange(n)) % n  # reduce phase before scaling
    basis = np.exp(-2j * np.pi * nk / n)
    return x.astype(np.complex128) @ basis


def dft(frame: np.ndarray) -> np.ndarray:
    """DFT of one frame (or a stack of frames on the last axis).

    Uses the radix-2 FFT for power-of-two lengths, direct evaluation otherwise.
    """
    n = np.shape(frame)[-1]
    if _is_power_of_two(n) and n > 1:
        return fft(frame)
    return dft_direct(frame)


def power_spectrum(X: np.ndarray) -> np.ndarray:
    """``|X[k]|^2`` for the non-negative bins k = 0..N/2."""
    X = np.asarray(X)
    n = X.shape[-1]
    if n % 2:
        raise ValueError("power_spectrum expects an even-length spectrum")
    half = X[..., : n // 2 + 1]
    return half.real ** 2 + half.imag ** 2


def hz_to_mel(f):
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise DomainError("frequency must be non-negative")
    m = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(m) if m.ndim == 0 else m


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise DomainError("mel value must be non-negative")
    f = 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    return float(f) if f.ndim == 0 else f


def mel_centers(cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Edge and centre frequencies (Hz) of the filterbank: n_mels + 2 points."""
    mels = np.linspace(hz_to_mel(cfg.f_min), hz_to_mel(cfg.f_max), cfg.n_mels + 2)
    return mel_to_hz(mels)


def mel_filterbank(cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Triangular filters, shape (n_mels, n_fft // 2 + 1), unit peak height.

    Filter j rises linearly from point j to its centre j + 1 and falls to
    point j + 2, evaluated at the exact FFT bin frequencies.
    """
    return _mel_filterbank_cached(cfg).copy()


@lru_cache(maxsize=8)
def _mel_filterbank_cached(cfg: FeatureConfig) -> np.ndarray:
    pts = mel_centers(cfg)
    bins = np.arange(cfg.n_fft // 2 + 1) * cfg.sample_rate / cfg.n_fft
    lo, mid, hi = pts[:-2, None], pts[1:-1, None], pts[2:, None]
    rising = (bins - lo) / (mid - lo)
    falling = (hi - bins) / (hi - mid)
    bank = np.maximum(0.0, np.minimum(rising, falling))
    empty = np.flatnonzero(bank.max(axis=1) == 0)
    if empty.size:
        raise ConfigError(
            f"{cfg.n_mels} mel filters too many for n_fft={cfg.n_fft}: "
            f"filters {empty.tolist()} cover no FFT bin")
    bank.setflags(write=False)
    return bank


def log_mel(P: np.ndarray, bank: np.ndarray, log_floor: float = 1e-10) -> np.ndarray:
    """Natural log of filterbank energies, floored to avoid -inf on silence."""
    energies = np.asarray(P, dtype=np.float64) @ bank.T
    return np.log(np.maximum(energies, log_floor))


@lru_cache(maxsize=8)
def _dct_matrix(n_in: int, n_out: int) -> np.ndarray:
    j = np.arange(n_in)
    k = np.arange(n_out)[:, None]
    basis = np.cos(np.pi * k * (2 * j + 1) / (2 * n_in))
    scale = np.full((n_out, 1), np.sqrt(2.0 / n_in))
    scale[0] = np.sqrt(1.0 / n_in)
    out = basis * scale
    out.setflags(write=False)
    return out


def dct_ii(v: np.ndarray, n_mfcc: int) -> np.ndarray:
    """Orthonormal DCT-II over the last axis, keeping the first ``n_mfcc`` terms."""
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[-1]
    if n_mfcc > n:
        raise ConfigError(f"n_mfcc={n_mfcc} exceeds input length {n}")
    return v @ _dct_matrix(n, n_mfcc).T


def mfcc_batch(signals: np.ndarray, cfg: FeatureConfig = FeatureConfig(),
               chunk: int = 16) -> np.ndarray:
    """MFCCs for a (B, L) array of equal-length signals -> (B, n_mfcc, n_frames) float32."""
    signals = np.atleast_2d(np.asarray(signals))
    window = hann_window(cfg.n_fft)
    bank = _mel_filterbank_cached(cfg)
    out = np.empty((signals.shape[0], cfg.n_mfcc, cfg.n_frames(signals.shape[1])), np.float32)
    for start in range(0, signals.shape[0], chunk):
        frames = frame_signal(signals[start:start + chunk].astype(np.float64), cfg) * window
        powers = power_spectrum(dft(frames))
        coeffs = dct_ii(log_mel(powers, bank, cfg.log_floor), cfg.n_mfcc)
        out[start:start + chunk] = coeffs.transpose(0, 2, 1)
    return out


def mfcc(w, cfg: FeatureConfig = FeatureConfig()) -> FeatureMap:
    """MFCC feature map of one clip.

    The caller is responsible for duration fitting and level normalization;
    see :func:`kwspot.pipeline.clip_features` for the full chain.
    """
    x = w.samples if isinstance(w, Waveform) else np.asarray(w)
    coeffs = mfcc_batch(x[None, :], cfg)[0]
    return FeatureMap(coeffs, cfg.n_fft, cfg.hop, cfg.sample_rate)


def save_feature_map(fm: FeatureMap, path) -> None:
    """Write ``MFCC`` | version | rows | cols (uint32 LE) then float32 LE row-major data."""
    c = np.ascontiguousarray(fm.coefficients, dtype="<f4")
    rows, cols = c.shape
    with open(path, "wb") as f:
        f.write(FEATURE_MAGIC + struct.pack("<III", FEATURE_VERSION, rows, cols))
        f.write(c.tobytes())


def load_feature_map(path) -> FeatureMap:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != FEATURE_MAGIC:
        raise DecodeError(f"{path}: not a feature dump")
    version, rows, cols = struct.unpack_from("<III", data, 4)
    if version != FEATURE_VERSION:
        raise DecodeError(f"{path}: unsupported feature dump version {version}")
    if len(data) != 16 + 4 * rows * cols:
        raise DecodeError(f"{path}: payload size does not match {rows}x{cols}")
    c = np.frombuffer(data, dtype="<f4", offset=16).reshape(rows, cols).astype(np.float32)
    return FeatureMap(c)
