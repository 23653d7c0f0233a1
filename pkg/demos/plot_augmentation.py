"""
Noise mixing at a target SNR
============================

Augmentation scales a noise clip so that the clean-to-noise power ratio hits
a drawn SNR, adds it, and re-normalises the mix. Here we check the SNR
arithmetic and look at a few random variants of one clip.
"""

import numpy as np

from kwspot.audio_io import Waveform, rms
from kwspot.augment import AugmentSpec, augment_clip, noise_gain
from kwspot.synth import NOISE_KINDS, keyword_signal, noise_signal

rng = np.random.default_rng(1)
clean = Waveform(np.clip(keyword_signal("word_c", rng), -1, 1))
pool = [noise_signal(kind, 88_000, rng) for kind in NOISE_KINDS]

# The gain that puts unit-RMS noise 10 dB below the clean clip.
g = noise_gain(clean.samples, pool[0][: len(clean)], 10.0)
measured = 10 * np.log10(np.mean(clean.samples ** 2) / np.mean((g * pool[0][: len(clean)]) ** 2))
print(f"gain {g:.4f} -> measured SNR {measured:.4f} dB")

# Seven variants: random shift within +-0.2 s, SNR in 0-20 dB, random noise family.
spec = AugmentSpec()
for k in range(spec.variants_per_clip):
    variant, draws = augment_clip(clean, pool, spec, rng)
    print(f"variant {k}: shift {draws['shift']:+6d} samples, SNR {draws['snr_db']:5.1f} dB, "
          f"noise {NOISE_KINDS[draws['noise']]:>7s}, output rms {rms(variant.samples):.4f}")
