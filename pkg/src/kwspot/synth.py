"""Synthetic stand-in corpus: 21 keyword-like classes plus seven noise families.

This is not speech. Digit classes are dual-tone bursts, word classes are
harmonic chirps, and the negative class mixes the noise families used for
augmentation with truncated keyword fragments. Patterns are jittered per clip (onset, duration,
frequency, amplitude) so the task is separable but not trivial.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio_io import CLIP_SAMPLES, SAMPLE_RATE, Waveform, save_wav

NEGATIVE_LABEL = "negative"
DIGIT_LABELS = [f"digit{i:02d}" for i in range(16)]
WORD_LABELS = ["word_a", "word_b", "word_c", "word_d"]
KEYWORD_LABELS = DIGIT_LABELS + WORD_LABELS
LABELS = KEYWORD_LABELS + [NEGATIVE_LABEL]

NOISE_KINDS = ("white", "pink", "brown", "hum", "babble", "water", "vehicle")

_LOW_TONES = (320.0, 520.0, 780.0, 1150.0)
_HIGH_TONES = (1800.0, 2700.0, 3900.0, 5600.0)
_CHIRPS = ((400.0, 1600.0), (1600.0, 400.0), (1200.0, 4800.0), (4800.0, 1200.0))


def _shaped_noise(n, rng, exponent=0.0, band=None):
    """Gaussian noise with power spectrum ~ 1/f**exponent, optionally band-limited."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / SAMPLE_RATE)
    gain = np.ones_like(f)
    gain[1:] = f[1:] ** (-exponent / 2.0)
    gain[0] = 0.0
    if band is not None:
        gain[(f < band[0]) | (f > band[1])] = 0.0
    x = np.fft.irfft(spec * gain, n)
    return x / (np.sqrt(np.mean(x * x)) + 1e-12)


def _slow_envelope(n, rng, rate_hz, depth):
    t = np.arange(n) / SAMPLE_RATE
    return 1.0 - depth * 0.5 * (1 + np.sin(2 * np.pi * rate_hz * t + rng.uniform(0, 2 * np.pi)))


def noise_signal(kind: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-RMS noise of one of :data:`NOISE_KINDS`, ``n`` samples long."""
    t = np.arange(n) / SAMPLE_RATE
    if kind == "white":
        x = rng.standard_normal(n)
    elif kind == "pink":
        x = _shaped_noise(n, rng, 1.0)
    elif kind == "brown":
        x = _shaped_noise(n, rng, 2.0, band=(20.0, 22_000.0))
    elif kind == "hum":
        base = rng.choice([50.0, 60.0]) * rng.uniform(0.99, 1.01)
        x = sum(rng.uniform(0.2, 1.0) / h * np.sin(2 * np.pi * base * h * t + rng.uniform(0, 6.3))
                for h in range(1, 8))
        x = x / np.sqrt(np.mean(x * x)) + 0.3 * _shaped_noise(n, rng, 1.0)
    elif kind == "babble":
        x = sum(_shaped_noise(n, rng, 1.0, band=(250.0, 3500.0))
                * _slow_envelope(n, rng, rng.uniform(2.5, 7.0), 0.9) for _ in range(5))
    elif kind == "water":
        bursts = _slow_envelope(n, rng, rng.uniform(5.0, 15.0), 0.7)
        bursts *= 1 + 2.0 * (rng.random(n // 440 + 1) < 0.15).repeat(440)[:n]
        x = _shaped_noise(n, rng, 0.5, band=(1500.0, 12_000.0)) * bursts
    elif kind == "vehicle":
        rpm = rng.uniform(25.0, 70.0)
        engine = sum(np.sin(2 * np.pi * rpm * h * t + rng.uniform(0, 6.3)) / h for h in range(1, 5))
        x = 3.0 * _shaped_noise(n, rng, 2.0, band=(20.0, 2_000.0)) + engine \
            * _slow_envelope(n, rng, rng.uniform(0.3, 1.0), 0.5)
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    x = np.asarray(x, dtype=np.float64)
    return x / (np.sqrt(np.mean(x * x)) + 1e-12)


def _burst_envelope(n, rng, onset, duration):
    env = np.zeros(n)
    a, b = int(onset * SAMPLE_RATE), int((onset + duration) * SAMPLE_RATE)
    b = min(b, n)
    length = b - a
    ramp = min(int(0.04 * SAMPLE_RATE), length // 2)
    env[a:b] = 1.0
    r = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
    env[a:a + ramp] = r
    env[b - ramp:b] = r[::-1]
    env[a:b] *= _slow_envelope(length, rng, rng.uniform(3.0, 6.0), 0.35)
    return env


def _keyword_burst(label, rng, n, onset, duration):
    """Render the keyword pattern of ``label`` starting at ``onset`` seconds.

    ``onset`` may be negative, in which case the head of the burst falls before
    the first sample; a burst running past ``n`` is cut at the end.
    """
    lead = max(0, int(np.ceil(-onset * SAMPLE_RATE)))
    total = n + lead
    onset += lead / SAMPLE_RATE
    t = np.arange(total) / SAMPLE_RATE
    env = _burst_envelope(total, rng, onset, duration)
    if label in DIGIT_LABELS:
        i = DIGIT_LABELS.index(label)
        f_lo = _LOW_TONES[i // 4] * rng.uniform(0.98, 1.02)
        f_hi = _HIGH_TONES[i % 4] * rng.uniform(0.98, 1.02)
        ratio = rng.uniform(0.5, 1.0)
        tone = np.sin(2 * np.pi * f_lo * t + rng.uniform(0, 6.3)) \
            + ratio * np.sin(2 * np.pi * f_hi * t + rng.uniform(0, 6.3))
    elif label in WORD_LABELS:
        f0, f1 = _CHIRPS[WORD_LABELS.index(label)]
        f0 *= rng.uniform(0.97, 1.03)
        f1 *= rng.uniform(0.97, 1.03)
        # exponential sweep across the burst, flat outside it
        a = int(onset * SAMPLE_RATE)
        frac = np.clip((np.arange(total) - a) / (duration * SAMPLE_RATE), 0.0, 1.0)
        inst = f0 * (f1 / f0) ** frac
        phase = 2 * np.pi * np.cumsum(inst) / SAMPLE_RATE + rng.uniform(0, 6.3)
        tone = np.sin(phase) + 0.4 * np.sin(2 * phase)
    else:
        raise ValueError(f"unknown label {label!r}")
    burst = tone * env
    # level set by the whole burst, so truncated fragments keep the same loudness
    burst *= 0.25 / (np.sqrt(np.mean(burst ** 2)) + 1e-12) * np.sqrt(duration / (total / SAMPLE_RATE))
    return burst[lead:]


def keyword_signal(label: str, rng: np.random.Generator, n: int = CLIP_SAMPLES,
                   background_rms: float | None = None) -> np.ndarray:
    """One synthetic clip of class ``label`` as float64 samples.

    Keyword classes hold one complete burst starting 0.1-0.45 s into the
    clip; the onset spread exceeds the streaming hop so neighbouring windows
    both see a plausible keyword. The negative class is either plain noise or a keyword fragment: a
    burst that the clip boundary cuts off at the start or the end, which is
    what a misaligned window in a stream sees.
    """
    if background_rms is None:
        background_rms = rng.uniform(0.002, 0.006)
    background = background_rms * noise_signal(rng.choice(NOISE_KINDS), n, rng)
    if label == NEGATIVE_LABEL:
        if rng.random() < 0.5:
            kind = NOISE_KINDS[rng.integers(len(NOISE_KINDS))]
            return 0.1 * noise_signal(kind, n, rng) \
                * _slow_envelope(n, rng, rng.uniform(0.2, 2.0), 0.6) + background
        source = KEYWORD_LABELS[rng.integers(len(KEYWORD_LABELS))]
        duration = rng.uniform(1.0, 1.3)
        if rng.random() < 0.5:
            onset = rng.uniform(0.7, 1.4)  # tail cut off by the clip end
        else:
            onset = rng.uniform(0.3 - duration, -0.25)  # head falls before the clip
        return _keyword_burst(source, rng, n, onset, duration) + background
    if label not in KEYWORD_LABELS:
        raise ValueError(f"unknown label {label!r}")
    onset = rng.uniform(0.1, 0.45)
    duration = rng.uniform(1.0, 1.3)
    return _keyword_burst(label, rng, n, onset, duration) + background


def synthesize_corpus(out_dir, clips_per_class: int, seed: int = 0,
                      labels=LABELS) -> dict[str, int]:
    """Write ``<out_dir>/<label>/<label>_<i>.wav``; deterministic per ``seed``."""
    out_dir = Path(out_dir)
    counts = {}
    for ci, label in enumerate(labels):
        d = out_dir / label
        d.mkdir(parents=True, exist_ok=True)
        for i in range(clips_per_class):
            rng = np.random.default_rng([seed, ci, i])
            x = np.clip(keyword_signal(label, rng), -1, 1)
            save_wav(Waveform(x), d / f"{label}_{i:04d}.wav")
        counts[label] = clips_per_class
    return counts


def synthesize_noise(out_dir, clips_per_kind: int, seed: int = 0,
                     seconds: float = 3.0) -> dict[str, int]:
    """Write the seven noise families as ``<out_dir>/<kind>/<kind>_<i>.wav`` at RMS 0.1."""
    out_dir = Path(out_dir)
    n = int(round(seconds * SAMPLE_RATE))
    for ki, kind in enumerate(NOISE_KINDS):
        d = out_dir / kind
        d.mkdir(parents=True, exist_ok=True)
        for i in range(clips_per_kind):
            rng = np.random.default_rng([seed, 1000 + ki, i])
            save_wav(Waveform(np.clip(0.1 * noise_signal(kind, n, rng), -1, 1)),
                     d / f"{kind}_{i:04d}.wav")
    return {k: clips_per_kind for k in NOISE_KINDS}
