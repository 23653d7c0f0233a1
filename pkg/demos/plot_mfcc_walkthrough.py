"""
From waveform to MFCC map, one stage at a time
===============================================

A synthetic two-tone keyword is pushed through each stage of the feature
front end: framing, Hann windowing, FFT, power spectrum, mel filterbank,
log compression and the DCT. The final 13 x 162 map is what the network sees.
"""

import numpy as np

from kwspot.audio_io import CLIP_SAMPLES, Waveform, fit_duration, rms_normalize
from kwspot.features import (
    FeatureConfig, dct_ii, dft, frame_signal, hann_window, log_mel, mel_centers,
    mel_filterbank, mfcc, power_spectrum,
)
from kwspot.synth import keyword_signal

cfg = FeatureConfig()
rng = np.random.default_rng(0)

# A 1.9 s clip: a dual tone (digit05 = 520 Hz + 2700 Hz) over faint noise.
clip = rms_normalize(fit_duration(Waveform(keyword_signal("digit05", rng))))
print(f"clip: {len(clip)} samples, rms {np.sqrt(np.mean(clip.samples ** 2)):.4f}")

# Framing: 1024-sample frames every 512 samples -> 162 frames.
frames = frame_signal(clip.samples, cfg)
print("frames:", frames.shape)

# Windowing and the radix-2 FFT of the loudest frame.
k = int(np.argmax(np.sum(frames ** 2, axis=1)))
spectrum = power_spectrum(dft(frames[k] * hann_window(cfg.n_fft)))
freqs = np.arange(len(spectrum)) * cfg.sample_rate / cfg.n_fft
top = np.sort(freqs[np.argsort(spectrum)[-2:]])
print(f"loudest frame {k}: strongest bins at {top[0]:.0f} Hz and {top[1]:.0f} Hz")

# Mel filterbank: 40 triangles spaced evenly on the mel scale.
bank = mel_filterbank(cfg)
print("filterbank:", bank.shape, "first centres (Hz):", np.round(mel_centers(cfg)[1:6]))

# Log mel energies, then the orthonormal DCT keeps 13 cepstral coefficients.
coeffs = dct_ii(log_mel(spectrum, bank), cfg.n_mfcc)
print("13 MFCCs of that frame:", np.round(coeffs, 2))

# The whole chain in one call, vectorised over frames.
fm = mfcc(clip)
print("feature map:", fm.coefficients.shape, "matches frame-by-frame:",
      np.allclose(fm.coefficients[:, k], coeffs, atol=1e-3))
assert fm.coefficients.shape == (13, CLIP_SAMPLES // 512 - 1)
