"""``kwspot`` command line: synth, features, augment, train, eval, classify, stream."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .errors import ConfigError, KwsError


def _snr_range(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO:HI, e.g. 0:20") from None
    return lo, hi


def cmd_synth(args):
    from .synth import synthesize_corpus, synthesize_noise
    counts = synthesize_corpus(args.out, args.clips, args.seed)
    print(f"wrote {sum(counts.values())} clips in {len(counts)} classes to {args.out}")
    if args.noise_out:
        n = synthesize_noise(args.noise_out, args.noise_clips, args.seed + 1)
        print(f"wrote {sum(n.values())} noise clips in {len(n)} classes to {args.noise_out}")


def cmd_features(args):
    from .audio_io import load_wav
    from .features import FeatureMap, save_feature_map
    from .pipeline import list_dataset, signals_to_features
    src, dst = Path(args.in_dir), Path(args.out)
    items = list_dataset(src) or [(p, "") for p in sorted(src.glob("*.wav"))]
    for path, label in items:
        fm = signals_to_features([load_wav(path).samples])[0, 0]
        target = dst / label / (path.stem + ".mfcc")
        target.parent.mkdir(parents=True, exist_ok=True)
        save_feature_map(FeatureMap(fm), target)
    print(f"wrote {len(items)} feature maps to {dst}")


def cmd_augment(args):
    from .augment import AugmentSpec, augment_dataset
    spec = AugmentSpec([args.noise], args.snr, args.shift, args.variants, args.seed)
    manifest = augment_dataset(args.in_dir, args.out, spec)
    print(f"augmented {sum(c for c, _ in manifest.values())} clips into "
          f"{sum(a for _, a in manifest.values())} variants under {args.out}")


def _load_labeled(data_dir, labels=None):
    from .pipeline import list_dataset, load_dataset_features
    items = list_dataset(data_dir)
    if not items:
        raise ConfigError(f"no <class>/*.wav files under {data_dir}")
    names = list(labels) if labels else sorted({label for _, label in items})
    unknown = {label for _, label in items} - set(names)
    if unknown:
        raise ConfigError(f"classes not in the label set: {sorted(unknown)}")
    X, y = load_dataset_features(items, names)
    return X, y, names


def cmd_train(args):
    from .nn import save_checkpoint
    from .train import (TrainConfig, evaluate, split_dataset, train_model,
                        write_confusion_csv, write_metrics_csv)
    cfg = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    overrides = {"seed": args.seed, "max_epochs": args.epochs}
    cfg = dataclasses.replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    X, y, labels = _load_labeled(args.data, cfg.labels)
    tr, va = split_dataset(y, cfg.split_ratio, cfg.seed)
    model, history = train_model((X[tr], y[tr]), (X[va], y[va]), cfg, labels=labels)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, out)
    metrics_dir = Path(args.metrics_dir) if args.metrics_dir else out.parent
    metrics_dir.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(history, metrics_dir / "metrics.csv")
    result = evaluate(model, X[va], y[va])
    write_confusion_csv(result.confusion, labels, metrics_dir / "confusion.csv")
    print(f"best validation accuracy {result.accuracy:.4f}; checkpoint {out}")


def cmd_eval(args):
    from .nn import load_checkpoint
    from .train import evaluate, write_confusion_csv
    model = load_checkpoint(args.model)
    X, y, labels = _load_labeled(args.data, model.labels)
    result = evaluate(model, X, y)
    if args.confusion:
        write_confusion_csv(result.confusion, labels, args.confusion)
    print(f"accuracy\t{result.accuracy:.4f}")
    for name, p, r in zip(labels, result.precision, result.recall):
        print(f"{name}\tprecision {p:.4f}\trecall {r:.4f}")


def cmd_classify(args):
    from .audio_io import load_wav
    from .infer import classify
    from .nn import load_checkpoint
    model = load_checkpoint(args.model)
    label, probs = classify(model, load_wav(args.wav))
    print(label)
    print("\t".join(f"{name}={p:.4f}" for name, p in zip(model.labels, probs)))


def cmd_stream(args):
    from .audio_io import SAMPLE_RATE, load_wav
    from .infer import StreamConfig, stream_detect
    from .nn import load_checkpoint
    model = load_checkpoint(args.model)
    cfg = StreamConfig(hop=int(round(args.hop * SAMPLE_RATE)), threshold=args.threshold,
                       smoothing=args.smoothing, negative_label=args.negative)
    for event in stream_detect(model, load_wav(args.wav), cfg):
        print(event.format())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kwspot", description="Keyword spotting toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("synth", help="generate the synthetic 21-class stand-in corpus")
    s.add_argument("--out", required=True, help="output dataset directory")
    s.add_argument("--clips", type=int, default=50, help="clips per class (default 50)")
    s.add_argument("--noise-out", help="also write the seven noise families here")
    s.add_argument("--noise-clips", type=int, default=5, help="clips per noise family")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("features", help="dump MFCC feature maps for every clip")
    s.add_argument("--in", dest="in_dir", required=True, help="dataset or flat WAV directory")
    s.add_argument("--out", required=True, help="output directory for .mfcc files")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("augment", help="noise/shift augmentation of a dataset")
    s.add_argument("--in", dest="in_dir", required=True, help="clean dataset directory")
    s.add_argument("--noise", required=True, help="noise directory (one subdirectory per class)")
    s.add_argument("--out", required=True, help="output dataset directory")
    s.add_argument("--variants", type=int, default=7, help="augmented variants per clip")
    s.add_argument("--snr", type=_snr_range, default=(0.0, 20.0), help="SNR range LO:HI in dB")
    s.add_argument("--shift", type=int, default=8_800, help="max time shift in samples")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("train", help="train a model; writes checkpoint, metrics.csv, confusion.csv")
    s.add_argument("--data", required=True, help="dataset directory")
    s.add_argument("--out", required=True, help="checkpoint path")
    s.add_argument("--config", help="key = value training config file")
    s.add_argument("--metrics-dir", help="where to write CSVs (default: checkpoint directory)")
    s.add_argument("--epochs", type=int, help="override max_epochs")
    s.add_argument("--seed", type=int, help="override the config seed")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="evaluate a checkpoint on a labeled dataset")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--confusion", help="write the confusion matrix CSV here")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("classify", help="classify one clip")
    s.add_argument("--model", required=True)
    s.add_argument("--wav", required=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("stream", help="detect keywords in a long recording")
    s.add_argument("--model", required=True)
    s.add_argument("--wav", required=True)
    s.add_argument("--hop", type=float, default=0.25, help="window hop in seconds")
    s.add_argument("--threshold", type=float, default=0.7)
    s.add_argument("--smoothing", type=int, default=2, help="consecutive agreeing windows")
    s.add_argument("--negative", default="negative", help="label of the rejection class")
    s.set_defaults(func=cmd_stream)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except KwsError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
