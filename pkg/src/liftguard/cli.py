"""Command-line entry point: gen, train, eval, predict, serve.

Data goes to stdout, diagnostics to stderr. Exit codes: 0 success,
1 runtime error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .data import (
    DatasetError,
    DatasetManifest,
    ModelFormatError,
    load_dataset,
    load_model,
    read_clip,
    save_model,
    write_clip,
)
from .metrics import MetricsError, eval_report
from .network import ArchitectureConfig, ConfigError, DimensionError, forward_batch
from .pose import (
    FILTERED_FEATURE_WIDTH,
    FULL_FEATURE_WIDTH,
    WINDOW_LENGTH,
    Label,
    ValidationError,
    build_windows,
    canonicalize,
    extract_features,
)
from .synthetic import SyntheticConfig, generate_synthetic, oracle_label
from .training import (
    NumericError,
    StratificationError,
    TrainingConfig,
    fit,
    split_dataset,
)

log = logging.getLogger("liftguard")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_RUNTIME_ERRORS = (
    DatasetError,
    ModelFormatError,
    ValidationError,
    DimensionError,
    MetricsError,
    StratificationError,
    NumericError,
    ConfigError,
    OSError,
)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _nonnegative_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must be in (0, 1), got {value}")
    return value


def _unit_interval(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liftguard",
        description="Lifting-posture classifier: synthesize data, train, evaluate, "
                    "predict offline, and serve live risk feedback.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset tree")
    p.add_argument("--out", required=True, help="dataset root directory")
    p.add_argument("--n", type=_nonnegative_int, default=62, help="number of clips")
    p.add_argument("--style-mix", type=_unit_interval, default=0.5,
                   help="fraction of squat-style clips")
    p.add_argument("--noise", type=_nonnegative_float, default=0.0,
                   help="landmark noise standard deviation")
    p.add_argument("--yaw-range", type=_nonnegative_float, default=30.0,
                   help="camera yaw range in degrees")
    p.add_argument("--scale-range", type=_positive_float, nargs=2,
                   default=(0.85, 1.15), metavar=("LO", "HI"),
                   help="subject scale range")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train on a dataset tree and evaluate the held-out split")
    p.add_argument("--data", required=True, help="dataset root directory")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--epochs", type=_positive_int, default=150)
    p.add_argument("--lr", type=_positive_float, default=0.001)
    p.add_argument("--early-stop", type=_positive_float, default=0.95,
                   help="training accuracy threshold for early stopping")
    p.add_argument("--patience", type=_positive_int, default=5,
                   help="consecutive epochs the threshold must hold")
    p.add_argument("--test-frac", type=_fraction, default=0.25)
    p.add_argument("--batch-size", type=_positive_int, default=None,
                   help="mini-batch size (default: full batch)")
    p.add_argument("--width", type=int, choices=(FILTERED_FEATURE_WIDTH, FULL_FEATURE_WIDTH),
                   default=FILTERED_FEATURE_WIDTH,
                   help="feature width: 88 drops the head landmarks, 132 keeps all")
    p.add_argument("--canonicalize", action="store_true",
                   help="body-centre and torso-rescale frames before feature extraction")
    p.add_argument("--history", default=None, help="history CSV path (default: next to model)")
    p.add_argument("--report", default=None, help="report JSON path (default: next to model)")
    p.add_argument("--roc-csv", default=None, help="also export the ROC curve as CSV")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset tree")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="also write the report JSON here")
    p.add_argument("--roc-csv", default=None, help="also export the ROC curve as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify 30-frame windows from a frame file")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="frames .jsonl file, or - for stdin")
    p.add_argument("--stride", type=_positive_int, default=WINDOW_LENGTH)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the streaming risk service")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=_positive_int, default=8765)
    p.add_argument("--stride", type=_positive_int, default=1,
                   help="frames between predictions after warm-up")
    p.set_defaults(func=cmd_serve)
    return parser


def cmd_gen(args) -> int:
    root = Path(args.out)
    (root / "good").mkdir(parents=True, exist_ok=True)
    (root / "bad").mkdir(parents=True, exist_ok=True)
    if args.n == 0:
        log.warning("generated an empty dataset tree at %s", root)
        manifest = DatasetManifest(root=".", clips=[])
        (root / "manifest.json").write_text(manifest.to_json() + "\n", encoding="utf-8")
        return EXIT_OK
    cfg = SyntheticConfig(
        n_sequences=args.n,
        style_mix=args.style_mix,
        camera_yaw_range=args.yaw_range,
        subject_scale_range=tuple(args.scale_range),
        noise_std=args.noise,
        seed=args.seed,
    )
    clips = []
    for idx, (frames, style) in enumerate(generate_synthetic(cfg)):
        label = oracle_label(frames)
        folder = "good" if label is Label.GOOD else "bad"
        clip_id = f"clip_{idx:04d}"
        write_clip(root / folder / f"{clip_id}.jsonl", frames)
        clips.append((folder, clip_id, len(frames)))
        log.debug("clip %s: style=%s label=%s", clip_id, style, folder)
    clips.sort(key=lambda c: (c[0] != "good", c[1]))
    # root recorded as "." so identical seeds give byte-identical trees
    manifest = DatasetManifest(root=".", clips=clips)
    (root / "manifest.json").write_text(manifest.to_json() + "\n", encoding="utf-8")
    counts = manifest.class_counts
    log.info("wrote %d clips to %s: %d good, %d bad",
             len(clips), root, counts["good"], counts["bad"])
    return EXIT_OK


def _evaluate(model, sequences):
    xs = np.stack([s.window.frames for s in sequences], axis=1)
    probs = forward_batch(model, xs)
    predicted = [Label(int(k)) for k in probs.argmax(axis=1)]
    actual = [s.label for s in sequences]
    scores = [float(p[Label.BAD.value]) for p in probs]
    return eval_report(predicted, actual, scores)


def cmd_train(args) -> int:
    filter_head = args.width == FILTERED_FEATURE_WIDTH
    data, manifest = load_dataset(args.data, filter_head=filter_head,
                                  canonicalize=args.canonicalize)
    log.info("loaded %d sequences from %d clips", len(data), len(manifest.clips))
    cfg = TrainingConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        early_stop_threshold=args.early_stop,
        early_stop_patience=args.patience,
        test_fraction=args.test_frac,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    arch = ArchitectureConfig(input_width=args.width, filter_head=filter_head,
                              canonicalize=args.canonicalize)
    train_part, test_part = split_dataset(data, cfg)
    log.info("split: %d train / %d test", len(train_part), len(test_part))
    model, history = fit(train_part, arch, cfg)
    log.info("training stopped after %d epochs (%s)",
             len(history.records), history.stop_reason.value)
    report = _evaluate(model, test_part)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    history_path = Path(args.history) if args.history else out.parent / "history.csv"
    history_path.write_text(history.to_csv(), encoding="utf-8")
    report_path = Path(args.report) if args.report else out.parent / "report.json"
    report_path.write_text(report.to_json() + "\n", encoding="utf-8")
    if args.roc_csv:
        Path(args.roc_csv).write_text(report.roc_csv(), encoding="utf-8")
    log.info("model: %s, history: %s, report: %s", out, history_path, report_path)
    print(json.dumps({"accuracy": report.accuracy, "auc": report.auc,
                      "test_samples": report.confusion.total}, separators=(",", ":")))
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data, _ = load_dataset(
        args.data,
        filter_head=bool(model.descriptor.get("filter_head", True)),
        canonicalize=bool(model.descriptor.get("canonicalize", False)),
    )
    report = _evaluate(model, data)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    if args.roc_csv:
        Path(args.roc_csv).write_text(report.roc_csv(), encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    filter_head = bool(model.descriptor.get("filter_head", True))
    canonical = bool(model.descriptor.get("canonicalize", False))
    if args.input == "-":
        lines = sys.stdin.read().splitlines()
        frames = []
        from .pose import parse_frame_line
        for lineno, line in enumerate(lines, start=1):
            if line.strip():
                try:
                    frames.append(parse_frame_line(line))
                except ValidationError as exc:
                    raise DatasetError(f"stdin:{lineno}: {exc}") from None
    else:
        frames = read_clip(Path(args.input))
    if canonical:
        frames = [canonicalize(f) for f in frames]
    features = [extract_features(f, filter_head=filter_head) for f in frames]
    windows = build_windows(features, WINDOW_LENGTH, args.stride, source_id=args.input)
    if not windows:
        log.warning("input has %d frames; %d are needed for one window", len(frames), WINDOW_LENGTH)
        return EXIT_OK
    for window in windows:
        probs = forward_batch(model, window.frames[:, None, :])[0]
        label = Label(int(np.argmax(probs)))
        end_ms = frames[window.start_index + WINDOW_LENGTH - 1].timestamp_ms
        print(json.dumps({
            "window_start": window.start_index,
            "t": end_ms,
            "label": label.name.lower(),
            "probs": [float(p) for p in probs],
            "confidence": float(probs.max()),
        }, separators=(",", ":")))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import ServiceOptions, serve

    serve(args.model, host=args.host, port=args.port,
          options=ServiceOptions(stride=args.stride))
    return EXIT_OK


def _configure_logging(verbose: bool) -> None:
    level_name = os.environ.get("LIFTGUARD_LOG", "").upper()
    level = logging.DEBUG if verbose else getattr(logging, level_name, logging.INFO)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except _RUNTIME_ERRORS as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
