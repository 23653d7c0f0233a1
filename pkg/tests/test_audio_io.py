import struct
import wave

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kwspot.audio_io import (
    CLIP_SAMPLES, SAMPLE_RATE, ClipLengthPolicy, Waveform, decode_wav_bytes,
    fit_duration, load_wav, rms, rms_normalize, save_wav,
)
from kwspot.errors import DecodeError, RateMismatchError, TooShortError, UnsupportedFormatError


def write_raw_wav(path, ints, rate=SAMPLE_RATE, channels=1, width=2):
    with wave.open(str(path), "wb") as f:
        f.setnchannels(channels)
        f.setsampwidth(width)
        f.setframerate(rate)
        f.writeframes(np.asarray(ints, dtype=f"<i{width}").tobytes())


def test_clip_geometry_constants():
    assert CLIP_SAMPLES == round(1.9 * 44_000) == 83_600
    # 704 kbps = 44,000 samples/s * 16 bits
    assert SAMPLE_RATE * 16 == 704_000


def test_decode_scale(tmp_path):
    write_raw_wav(tmp_path / "a.wav", [0, -32768, 16384, 32767])
    w = load_wav(tmp_path / "a.wav")
    assert w.sample_rate == 44_000
    assert w.samples.dtype == np.float32
    assert w.samples[0] == 0.0
    assert w.samples[1] == -1.0
    assert w.samples[2] == 0.5
    assert w.samples[3] == np.float32(32767 / 32768)


def test_sine_round_trip(tmp_path):
    t = np.arange(CLIP_SAMPLES) / SAMPLE_RATE
    x = 0.8 * np.sin(2 * np.pi * 440 * t)
    save_wav(Waveform(x), tmp_path / "sine.wav")
    back = load_wav(tmp_path / "sine.wav")
    assert len(back) == CLIP_SAMPLES
    assert np.max(np.abs(back.samples - x)) <= 1 / 32768


def test_random_round_trip(tmp_path, rng):
    x = rng.uniform(-1, 1, 5000)
    save_wav(Waveform(x), tmp_path / "r.wav")
    assert np.max(np.abs(load_wav(tmp_path / "r.wav").samples - x)) <= 1 / 32768


def test_save_empty(tmp_path):
    save_wav(Waveform(np.zeros(0)), tmp_path / "e.wav")
    data = (tmp_path / "e.wav").read_bytes()
    assert data[:4] == b"RIFF"
    i = data.index(b"data")
    assert struct.unpack_from("<I", data, i + 4)[0] == 0
    assert len(load_wav(tmp_path / "e.wav")) == 0


def test_save_clamps(tmp_path):
    save_wav(Waveform([2.0, -3.0, 1.0]), tmp_path / "c.wav")
    with wave.open(str(tmp_path / "c.wav")) as f:
        ints = np.frombuffer(f.readframes(3), "<i2")
    assert ints.tolist() == [32767, -32768, 32767]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-32768, 32767), max_size=200))
def test_grid_round_trip_exact(tmp_path_factory, ints):
    path = tmp_path_factory.mktemp("grid") / "g.wav"
    w = Waveform(np.asarray(ints, dtype=np.float64) / 32768)
    save_wav(w, path)
    back = load_wav(path)
    assert np.array_equal(back.samples, w.samples)
    assert np.all(np.isfinite(back.samples))


def test_rejects_stereo(tmp_path):
    write_raw_wav(tmp_path / "s.wav", [0, 0, 1, 1], channels=2)
    with pytest.raises(UnsupportedFormatError):
        load_wav(tmp_path / "s.wav")


def test_rejects_24bit(tmp_path):
    with wave.open(str(tmp_path / "p.wav"), "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(3)
        f.setframerate(SAMPLE_RATE)
        f.writeframes(b"\x00" * 9)
    with pytest.raises(UnsupportedFormatError):
        load_wav(tmp_path / "p.wav")


def test_rejects_float_format():
    fmt = struct.pack("<HHIIHH", 3, 1, SAMPLE_RATE, SAMPLE_RATE * 4, 4, 32)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", 4) + b"\0" * 4
    with pytest.raises(UnsupportedFormatError):
        decode_wav_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


def test_rejects_other_rate(tmp_path):
    write_raw_wav(tmp_path / "r.wav", [0, 1], rate=44_100)
    with pytest.raises(RateMismatchError):
        load_wav(tmp_path / "r.wav")
    assert load_wav(tmp_path / "r.wav", expected_rate=None).sample_rate == 44_100


@pytest.mark.parametrize("blob", [b"", b"RIFF\0\0\0\0WAVX", b"RIFF\x04\0\0\0WAVE"])
def test_malformed_header(blob):
    with pytest.raises(DecodeError):
        decode_wav_bytes(blob)


def test_truncated_data_chunk(tmp_path):
    write_raw_wav(tmp_path / "t.wav", np.arange(100))
    data = (tmp_path / "t.wav").read_bytes()[:-20]
    with pytest.raises(DecodeError):
        decode_wav_bytes(data)


def test_missing_file(tmp_path):
    with pytest.raises(DecodeError):
        load_wav(tmp_path / "nope.wav")


class TestFitDuration:
    def test_identity(self, rng):
        x = rng.uniform(-1, 1, CLIP_SAMPLES)
        assert np.array_equal(fit_duration(Waveform(x)).samples, np.float32(x))

    def test_truncates_end(self, rng):
        x = rng.uniform(-1, 1, 100_000).astype(np.float32)
        assert np.array_equal(fit_duration(Waveform(x)).samples, x[:83_600])

    def test_pads_end(self, rng):
        x = rng.uniform(-1, 1, 40_000).astype(np.float32)
        out = fit_duration(Waveform(x)).samples
        assert np.array_equal(out[:40_000], x)
        assert np.count_nonzero(out[40_000:]) == 0 and len(out[40_000:]) == 43_600

    def test_reject_mode(self):
        with pytest.raises(TooShortError):
            fit_duration(Waveform(np.zeros(10)), ClipLengthPolicy(pad_mode="reject"))

    def test_wrong_rate(self):
        with pytest.raises(RateMismatchError):
            fit_duration(Waveform(np.zeros(10), 16_000))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 120_000))
    def test_length_always_exact(self, n):
        assert len(fit_duration(Waveform(np.ones(n)))) == CLIP_SAMPLES


class TestRmsNormalize:
    def test_zero_passthrough(self):
        assert not np.any(rms_normalize(Waveform(np.zeros(100)), 0.1).samples)

    def test_constant(self):
        out = rms_normalize(Waveform(np.full(100, 0.5)), 0.1).samples
        np.testing.assert_allclose(out, 0.1, rtol=1e-6)

    def test_random(self, rng):
        out = rms_normalize(Waveform(rng.normal(0, 0.3, 10_000)), 0.1)
        assert abs(rms(out.samples) - 0.1) <= 1e-6 * 0.1 + 1e-9

    def test_idempotent(self, rng):
        once = rms_normalize(Waveform(rng.normal(0, 0.02, 10_000)), 0.1)
        twice = rms_normalize(once, 0.1)
        np.testing.assert_allclose(twice.samples, once.samples, atol=1e-6)

    def test_clips_after_scaling(self):
        x = np.zeros(1000)
        x[0] = 1.0
        out = rms_normalize(Waveform(x), 0.5).samples
        assert out.max() == 1.0

    def test_bad_target(self):
        with pytest.raises(ValueError):
            rms_normalize(Waveform(np.ones(3)), 0.0)
