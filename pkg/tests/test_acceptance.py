"""Acceptance gate: one PASS/FAIL line per criterion, printed to the terminal.

The heavy fixtures (synthetic corpus, end-to-end training) are module-scoped
and shared between criteria. The whole module takes several minutes on a
single CPU core and is marked ``slow``.
"""

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.fft

from kwspot.audio_io import CLIP_SAMPLES, SAMPLE_RATE, Waveform
from kwspot.augment import AugmentSpec, augment_clip, match_length, mix_noise, noise_gain
from kwspot.cli import main
from kwspot.features import (
    FeatureConfig, dct_ii, dft, dft_direct, hann_window, hz_to_mel, mel_to_hz, mfcc,
)
from kwspot.infer import StreamDetector, stream_detect
from kwspot.nn import Adam, Model, ModelSpec, checkpoint_bytes, cross_entropy, load_checkpoint, softmax
from kwspot.pipeline import list_dataset, load_dataset_features, signals_to_features
from kwspot.synth import LABELS, NOISE_KINDS, keyword_signal, noise_signal
from kwspot.train import TrainConfig, evaluate, split_dataset, train_model

pytestmark = pytest.mark.slow

TESTS_DIR = Path(__file__).parent
AUG_EPOCHS = 15


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return ok
    return emit


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    t0 = time.perf_counter()
    assert main(["synth", "--out", str(root / "data"), "--clips", "50", "--seed", "0"]) == 0
    return root, time.perf_counter() - t0


@pytest.fixture(scope="module")
def trained(corpus):
    """Default architecture and default TrainConfig, trained through the CLI."""
    root, synth_seconds = corpus
    t0 = time.perf_counter()
    assert main(["train", "--data", str(root / "data"), "--out", str(root / "run" / "model.kwsm"),
                 "--seed", "0"]) == 0
    return root, synth_seconds + time.perf_counter() - t0


def test_reference_accuracy_statement(report):
    report("reference-accuracy reproducibility", True,
           "reference accuracies of 91.79% test / 95% validation are NOT reproducible: "
           "the original 40,000-clip corpus is private; the property checks below substitute")


def test_dsp_oracle_suite(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    frames = rng.normal(size=(100, 1024))
    fast, direct = dft(frames), dft_direct(frames)
    fft_err = float((np.abs(fast - direct).max(axis=1) / np.abs(direct).max(axis=1)).max())
    parseval = float(np.max(np.abs(np.sum(np.abs(fast) ** 2, axis=1) / 1024
                                   / np.sum(frames ** 2, axis=1) - 1)))
    w = hann_window(1024)
    hann_ok = w[0] == 0 and w[-1] == 0 and np.array_equal(w, w[::-1])
    f = np.concatenate([[0.0], np.geomspace(1, 22_000, 500)])
    mel_err = float(np.max(np.abs(mel_to_hz(hz_to_mel(f)) - f) / np.maximum(f, 1)))
    v = rng.normal(size=(100, 40))
    dct_err = float(np.abs(scipy.fft.idct(dct_ii(v, 40), norm="ortho") - v).max())
    elapsed = time.perf_counter() - t0
    ok = (fft_err <= 1e-6 and parseval <= 1e-6 and hann_ok and mel_err <= 1e-9
          and dct_err <= 1e-6 and elapsed < 10)
    report("DSP oracle suite", ok,
           f"fft rel err {fft_err:.2e}, Parseval {parseval:.2e}, Hann exact {hann_ok}, "
           f"mel inverse {mel_err:.2e}, DCT recovery {dct_err:.2e}, {elapsed:.2f}s")
    assert ok


def test_frame_geometry(report):
    fm = mfcc(Waveform(np.random.default_rng(1).normal(0, 0.1, CLIP_SAMPLES)))
    shape = fm.coefficients.shape
    ok = shape == (13, 162) and FeatureConfig().n_frames(CLIP_SAMPLES) == 162
    report("frame geometry", ok, f"1.9 s @ {SAMPLE_RATE} Hz -> {shape[0]} x {shape[1]}")
    assert ok


def test_gradient_suite(report):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(TESTS_DIR / "test_nn.py"), "-k", "gradient"],
                          capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and elapsed < 60
    report("gradient suite", ok, f"{summary} (layers + shrunken model, f64 1e-5 / f32 1e-2), "
                                 f"{elapsed:.1f}s")
    assert ok


def test_overfit_sanity(report):
    t0 = time.perf_counter()
    signals = [np.clip(keyword_signal(label, np.random.default_rng([9, ci, i])), -1, 1)
               for ci, label in enumerate(LABELS) for i in range(2)]
    y = np.repeat(np.arange(len(LABELS)), 2)
    X = signals_to_features(signals)
    rng = np.random.default_rng(0)
    model = Model(ModelSpec(), seed=1, labels=LABELS)
    model.fit_input_norm(X)
    opt = Adam(1e-3)
    reached = None
    for step in range(1, 201):
        probs = softmax(model.forward(X, train=True, rng=rng))
        _, grad = cross_entropy(probs, y)
        model.backward(grad)
        opt.step(model.named_params(), model.named_grads())
        if step % 5 == 0 and np.all(model.predict(X) == y):
            reached = step
            break
    elapsed = time.perf_counter() - t0
    ok = reached is not None and elapsed < 120
    report("overfit sanity", ok, f"42 clips, 100% train accuracy at step {reached} "
                                 f"(limit 200, lr 1e-3), {elapsed:.1f}s")
    assert ok


def test_end_to_end_training(trained, report):
    root, seconds = trained
    rows = (root / "run" / "metrics.csv").read_text().splitlines()[1:]
    val_acc = [float(r.split(",")[4]) for r in rows]
    first = next((i + 1 for i, a in enumerate(val_acc) if a >= 0.95), None)
    best30 = max(val_acc[:30])
    ok = best30 >= 0.95 and seconds < 600
    report("end-to-end synthetic training", ok,
           f"50 clips/class, best val acc within 30 epochs {best30:.4f} (>= 0.95 first at epoch "
           f"{first}); full default run {len(rows)} epochs, {seconds:.0f}s")
    assert ok


def _augmentation_direction():
    """Clean-only vs augmented training, both scored on a 5 dB noisy test set.

    Training clips and their variants never cross the split. Both models use
    the same training recipe; the augmented set is simply eight times larger.
    """
    def clips(n, seed):
        sig = [np.clip(keyword_signal(label, np.random.default_rng([seed, ci, i])), -1, 1)
               for ci, label in enumerate(LABELS) for i in range(n)]
        return sig, np.repeat(np.arange(len(LABELS)), n)

    def pool(seed):
        return [0.1 * noise_signal(kind, 3 * SAMPLE_RATE, np.random.default_rng([seed, ki, i]))
                for ki, kind in enumerate(NOISE_KINDS) for i in range(4)]

    clean, y = clips(10, 101)
    tr, va = split_dataset(y, 0.8, 0)
    train_pool, test_pool = pool(102), pool(104)
    spec = AugmentSpec(snr_db_range=(0, 20), variants_per_clip=7)
    aug, aug_y = [], []
    for j in tr:
        rng = np.random.default_rng([103, int(j)])
        for _ in range(spec.variants_per_clip):
            aug.append(augment_clip(Waveform(clean[j]), train_pool, spec, rng)[0].samples)
            aug_y.append(y[j])
    test, test_y = clips(10, 105)
    noisy = []
    for j, s in enumerate(test):
        rng = np.random.default_rng([106, j])
        noise = test_pool[int(rng.integers(len(test_pool)))]
        noisy.append(mix_noise(Waveform(s), Waveform(match_length(noise, CLIP_SAMPLES, rng)), 5.0).samples)

    X = signals_to_features(clean)
    Xa = np.concatenate([X[tr], signals_to_features(aug)])
    ya = np.concatenate([y[tr], aug_y])
    Xn = signals_to_features(noisy)
    cfg = TrainConfig(max_epochs=AUG_EPOCHS)
    results = {}
    for name, (Xt, yt) in {"clean": (X[tr], y[tr]), "augmented": (Xa, ya)}.items():
        model, _ = train_model((Xt, yt), (X[va], y[va]), cfg, labels=LABELS)
        results[name] = evaluate(model, Xn, test_y).accuracy
    return results


def test_augmentation_direction(report):
    t0 = time.perf_counter()
    acc = _augmentation_direction()
    gain = acc["augmented"] - acc["clean"]
    ok = gain >= 0.05
    report("augmentation direction", ok,
           f"noisy (5 dB) test accuracy clean-trained {acc['clean']:.3f} vs augmented-trained "
           f"{acc['augmented']:.3f}, gain {100 * gain:+.1f} pp (need >= +5), "
           f"{time.perf_counter() - t0:.0f}s")
    assert ok


def test_augmentation_snr_accuracy(report):
    rng = np.random.default_rng(7)
    pool = [noise_signal(kind, 2 * SAMPLE_RATE, np.random.default_rng([8, k]))
            for k, kind in enumerate(NOISE_KINDS)]
    spec = AugmentSpec()
    worst = 0.0
    for i in range(1000):
        clean = Waveform(np.clip(keyword_signal(LABELS[i % len(LABELS)], rng), -1, 1))
        snr = float(rng.uniform(*spec.snr_db_range))
        noise = match_length(pool[i % len(pool)], CLIP_SAMPLES, rng)
        g = noise_gain(clean.samples, noise, snr)
        pc = np.mean(np.square(clean.samples, dtype=np.float64))
        pn = np.mean(np.square(g * noise.astype(np.float64)))
        worst = max(worst, abs(10 * np.log10(pc / pn) - snr))
    ok = worst <= 0.1
    report("augmentation SNR accuracy", ok, f"1000 mixes, worst |measured - target| = {worst:.2e} dB")
    assert ok


def _noise_stream(kind, seed, seconds=10.0, level=0.004):
    return level * noise_signal(kind, int(seconds * SAMPLE_RATE), np.random.default_rng(seed))


def test_streaming_detection(trained, report):
    root, _ = trained
    model = load_checkpoint(root / "run" / "model.kwsm")
    offset = 3 * SAMPLE_RATE
    false_alarms, misses, details = 0, [], []
    chunked_ok = True
    for ki, kind in enumerate(NOISE_KINDS):
        background = _noise_stream(kind, [200, ki])
        false_alarms += len(stream_detect(model, Waveform(background)))
        label = LABELS[int(np.random.default_rng([201, ki]).integers(len(LABELS) - 1))]
        stream = background.copy()
        stream[offset:offset + CLIP_SAMPLES] += keyword_signal(label, np.random.default_rng([202, ki]),
                                                               background_rms=0.0)
        stream = np.clip(stream, -1, 1)
        events = stream_detect(model, Waveform(stream))
        hit = len(events) == 1 and events[0].label == label and abs(events[0].start - 3.0) <= 0.5
        if not hit:
            misses.append(f"{kind}/{label}:{[(e.label, round(e.start, 2)) for e in events]}")
        else:
            details.append(f"{events[0].start - 3.0:+.2f}")
        if ki == 0:
            det = StreamDetector(model)
            cuts = np.sort(np.random.default_rng(203).choice(len(stream), 25, replace=False))
            for piece in np.split(stream.astype(np.float32), cuts):
                det.push(piece)
            chunked_ok = det.events == events
    ok = false_alarms == 0 and not misses and chunked_ok
    report("streaming detection", ok,
           f"{len(NOISE_KINDS) - len(misses)}/{len(NOISE_KINDS)} injected keywords detected once "
           f"within 0.5 s (offsets {', '.join(details)}), misses {misses}, "
           f"{false_alarms} events on {len(NOISE_KINDS)} pure-noise streams, "
           f"chunked == whole {chunked_ok}")
    assert ok


def test_determinism(trained, tmp_path, report):
    root, _ = trained
    runs = []
    small = tmp_path / "small"
    assert main(["synth", "--out", str(small), "--clips", "3", "--seed", "9"]) == 0
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["train", "--data", str(small), "--out", str(out / "m.kwsm"),
                     "--epochs", "3", "--seed", "4"]) == 0
        runs.append(((out / "metrics.csv").read_bytes(), (out / "m.kwsm").read_bytes()))
    metrics_same = runs[0][0] == runs[1][0]
    ckpt_same = runs[0][1] == runs[1][1]

    model = load_checkpoint(root / "run" / "model.kwsm")
    items = list_dataset(root / "data")
    X, y = load_dataset_features(items[::5], model.labels)
    before = evaluate(model, X, y)
    (tmp_path / "again.kwsm").write_bytes(checkpoint_bytes(model))
    roundtrip = load_checkpoint(tmp_path / "again.kwsm")
    after = evaluate(roundtrip, X, y)
    probs_same = np.array_equal(model.predict_proba(X), roundtrip.predict_proba(X))
    eval_same = (before.accuracy == after.accuracy and np.array_equal(before.confusion, after.confusion)
                 and probs_same)
    ok = metrics_same and ckpt_same and eval_same
    report("determinism", ok, f"train x2 metrics.csv identical {metrics_same}, checkpoint identical "
                              f"{ckpt_same}; save/load evaluation bit-exact {eval_same} "
                              f"(acc {before.accuracy:.4f} on {len(y)} clips)")
    assert ok

