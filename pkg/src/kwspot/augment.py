"""Waveform-level augmentation: noise superimposition at a target SNR,
volume normalization, and time shifting."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import CLIP_SAMPLES, DEFAULT_TARGET_RMS, Waveform, fit_duration, load_wav, rms_normalize, save_wav
from .errors import ConfigError, DegenerateInputError
from .pipeline import list_dataset


@dataclass
class AugmentSpec:
    noise_dirs: list = field(default_factory=list)
    snr_db_range: tuple = (0.0, 20.0)
    shift: int = 8_800
    variants_per_clip: int = 7
    seed: int = 0
    target_rms: float = DEFAULT_TARGET_RMS

    def __post_init__(self):
        lo, hi = self.snr_db_range
        if lo > hi:
            raise ConfigError(f"SNR range low {lo} exceeds high {hi}")
        if not 0 <= self.shift < CLIP_SAMPLES:
            raise ConfigError(f"shift bound must lie in [0, {CLIP_SAMPLES})")
        if self.variants_per_clip < 0:
            raise ConfigError("variants_per_clip must be >= 0")


def _power(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(x * x))


def noise_gain(clean, noise, snr_db: float) -> float:
    """Gain g such that ``10 log10(P(clean) / P(g * noise)) == snr_db``."""
    p_clean, p_noise = _power(clean), _power(noise)
    if p_clean == 0.0:
        raise DegenerateInputError("clean signal is all zeros")
    if p_noise == 0.0:
        raise DegenerateInputError("noise is all zeros; cannot attain the requested SNR")
    return float(np.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0))))


def mix_noise(clean: Waveform, noise: Waveform, snr_db: float,
              target_rms: float = DEFAULT_TARGET_RMS) -> Waveform:
    """Superimpose ``noise`` on ``clean`` at ``snr_db``, then RMS-normalize and clip.

    Both inputs must already have the same length (see :func:`match_length`).
    """
    if len(clean) != len(noise):
        raise ValueError(f"length mismatch: clean {len(clean)} vs noise {len(noise)}")
    g = noise_gain(clean.samples, noise.samples, snr_db)
    mixed = clean.samples.astype(np.float64) + g * noise.samples.astype(np.float64)
    return rms_normalize(Waveform(mixed, clean.sample_rate), target_rms)


def match_length(noise: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Crop at a random offset when too long, tile when too short."""
    noise = np.asarray(noise)
    if len(noise) == 0:
        raise DegenerateInputError("empty noise clip")
    if len(noise) >= n:
        start = int(rng.integers(0, len(noise) - n + 1))
        return noise[start:start + n]
    reps = -(-n // len(noise))
    return np.tile(noise, reps)[:n]


def time_shift(w: Waveform, shift: int) -> Waveform:
    """Delay (shift > 0) or advance (shift < 0) the content, zero-filling; length preserved."""
    x = w.samples
    n = len(x)
    if abs(shift) >= n:
        raise ConfigError(f"shift {shift} out of range for a {n}-sample clip")
    out = np.zeros_like(x)
    if shift > 0:
        out[shift:] = x[:n - shift]
    elif shift < 0:
        out[:n + shift] = x[-shift:]
    else:
        out[:] = x
    return Waveform(out, w.sample_rate)


def noise_pool(noise_dirs) -> list[Path]:
    """All ``.wav`` files under the given directories (one directory per noise class).

    A directory that holds no ``.wav`` files itself contributes its class
    subdirectories instead.
    """
    files = []
    for d in noise_dirs:
        d = Path(d)
        own = sorted(d.glob("*.wav"))
        files.extend(own if own else sorted(d.glob("*/*.wav")))
    return files


def augment_clip(clean: Waveform, pool: list[np.ndarray], spec: AugmentSpec,
                 rng: np.random.Generator) -> tuple[Waveform, dict]:
    """One augmented variant: random shift, then noise at a random SNR. Returns (clip, draws)."""
    s = int(rng.integers(-spec.shift, spec.shift + 1))
    snr = float(rng.uniform(*spec.snr_db_range))
    k = int(rng.integers(len(pool)))
    shifted = time_shift(fit_duration(clean), s)
    noise = Waveform(match_length(pool[k], len(shifted), rng))
    return mix_noise(shifted, noise, snr, spec.target_rms), {"shift": s, "snr_db": snr, "noise": k}


def augment_dataset(in_dir, out_dir, spec: AugmentSpec) -> dict[str, tuple[int, int]]:
    """Write ``variants_per_clip`` augmented copies of every clip under ``in_dir``.

    Each clip gets its own RNG stream seeded from ``(spec.seed, clip index)``.
    Output goes to ``<out_dir>/<label>/<stem>_aug<k>.wav``, with a
    ``manifest.csv`` of (class, clean_count, augmented_count).
    """
    items = list_dataset(in_dir)
    pool_files = noise_pool(spec.noise_dirs)
    if not pool_files:
        raise ConfigError("noise pool is empty")
    pool = [load_wav(p).samples for p in pool_files]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict[str, list[int]] = {}
    for idx, (path, label) in enumerate(items):
        counts = manifest.setdefault(label, [0, 0])
        counts[0] += 1
        if spec.variants_per_clip == 0:
            continue
        clean = load_wav(path)
        rng = np.random.default_rng([spec.seed, idx])
        (out_dir / label).mkdir(exist_ok=True)
        for k in range(spec.variants_per_clip):
            clip, _ = augment_clip(clean, pool, spec, rng)
            save_wav(clip, out_dir / label / f"{path.stem}_aug{k}.wav")
            counts[1] += 1
    with open(out_dir / "manifest.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["class", "clean_count", "augmented_count"])
        for label in sorted(manifest):
            writer.writerow([label, *manifest[label]])
    return {k: tuple(v) for k, v in manifest.items()}
