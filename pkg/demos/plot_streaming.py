"""
Spotting a keyword in a continuous stream
=========================================

A 1.9 s window slides over a 10 s noise recording in 0.25 s hops. An event
fires when two consecutive windows agree on the same keyword with
probability >= 0.7; the negative class rejects plain noise.

A checkpoint is required; create one with::

    kwspot synth --out data --clips 50
    kwspot train --data data --out model.kwsm --epochs 30
"""

import sys

import numpy as np

from kwspot.audio_io import CLIP_SAMPLES, SAMPLE_RATE, Waveform
from kwspot.infer import StreamDetector, stream_detect
from kwspot.nn import load_checkpoint
from kwspot.synth import keyword_signal, noise_signal

model = load_checkpoint(sys.argv[1] if len(sys.argv) > 1 else "model.kwsm")

# Ten seconds of quiet pink noise, with "word_a" dropped in at t = 3 s.
rng = np.random.default_rng(5)
stream = 0.004 * noise_signal("pink", 10 * SAMPLE_RATE, rng)
print("pure noise events:", stream_detect(model, Waveform(stream)))
at = 3 * SAMPLE_RATE
stream[at:at + CLIP_SAMPLES] += keyword_signal("word_a", rng, background_rms=0.0)

for event in stream_detect(model, Waveform(stream)):
    print("event:", event.format())

# Feeding the same samples in arbitrary chunks gives the same answer.
detector = StreamDetector(model)
for chunk in np.array_split(stream, 37):
    for event in detector.push(chunk):
        print("live event:", event.format())
